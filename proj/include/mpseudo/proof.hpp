#pragma once

// Proof that a pseudonym commits to an identifier the verifier already knows.
//
// The verifier recomputes H(encode(id)) itself, so a proof only convinces a
// party that holds the identifier. The proof carries digests only.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"
#include "mpseudo/tree.hpp"

namespace mpseudo {

struct OwnershipProof {
    SuiteId suite_id;
    std::size_t leaf_count;
    std::size_t identifier_index;
    std::vector<PathStep> path;

    // Total digest material carried by the path.
    std::size_t digest_bytes() const noexcept
    {
        std::size_t n = 0;
        for (const auto& step : path) n += step.digest.size();
        return n;
    }

    friend bool operator==(const OwnershipProof&, const OwnershipProof&) = default;
};

inline OwnershipProof prove(const PseudonymTree& tree, std::size_t identifier_index)
{
    return {tree.suite().id, tree.leaf_count(), identifier_index, tree.auth_path(identifier_index)};
}

enum class RejectReason : std::uint8_t { SuiteMismatch, LengthMismatch, RootMismatch };

inline std::string_view reason_token(RejectReason r) noexcept
{
    switch (r) {
    case RejectReason::SuiteMismatch: return "suite_mismatch";
    case RejectReason::LengthMismatch: return "length_mismatch";
    case RejectReason::RootMismatch: return "root_mismatch";
    }
    return "root_mismatch";
}

struct VerifyResult {
    bool accepted;
    RejectReason reason;

    static VerifyResult accept() noexcept { return {true, RejectReason::RootMismatch}; }
    static VerifyResult reject(RejectReason r) noexcept { return {false, r}; }

    explicit operator bool() const noexcept { return accepted; }

    std::string to_string() const
    {
        return accepted ? std::string("accept") : "reject: " + std::string(reason_token(reason));
    }
};

// Never throws on parseable input; every failure is a coarse reject reason.
inline VerifyResult verify(const Pseudonym& pseudonym, const Identifier& claimed, const OwnershipProof& proof)
{
    if (proof.suite_id != pseudonym.suite_id) return VerifyResult::reject(RejectReason::SuiteMismatch);

    const HashSuite suite = suite_of(pseudonym.suite_id);
    if (!valid_leaf_count(pseudonym.leaf_count) || proof.leaf_count != pseudonym.leaf_count)
        return VerifyResult::reject(RejectReason::LengthMismatch);
    const std::size_t height = static_cast<std::size_t>(std::countr_zero(pseudonym.leaf_count));
    if (proof.path.size() != height || pseudonym.root.size() != suite.digest_len)
        return VerifyResult::reject(RejectReason::LengthMismatch);
    if (proof.identifier_index >= pseudonym.leaf_count / 2) return VerifyResult::reject(RejectReason::LengthMismatch);
    for (const auto& step : proof.path)
        if (step.digest.size() != suite.digest_len) return VerifyResult::reject(RejectReason::LengthMismatch);

    Bytes encoded;
    try {
        encoded = encode(claimed);
    } catch (const Error&) {
        return VerifyResult::reject(RejectReason::RootMismatch);
    }

    // The identifier index fixes the leaf position, and with it the side of
    // every sibling. A path whose directions disagree cannot belong here.
    bool directions_ok = true;
    std::size_t node = 2 * proof.identifier_index;
    Digest running = hash(suite, encoded);
    for (const auto& step : proof.path) {
        const Direction expected = (node & 1) == 0 ? Direction::Right : Direction::Left;
        directions_ok &= step.direction == expected;
        running = step.direction == Direction::Right ? hash_pair(suite, running, step.digest)
                                                     : hash_pair(suite, step.digest, running);
        node >>= 1;
    }
    const bool root_ok = constant_time_equal(running, pseudonym.root);
    if (!(root_ok && directions_ok)) return VerifyResult::reject(RejectReason::RootMismatch);
    return VerifyResult::accept();
}

// Canonical JSON with a fixed key order:
// {"v":1,"suite":...,"leaves":...,"index":...,"path":[{"dir":"L"|"R","h":"<hex>"},...]}
inline std::string serialize_proof(const OwnershipProof& proof)
{
    nlohmann::ordered_json j;
    j["v"] = 1;
    j["suite"] = suite_token(proof.suite_id);
    j["leaves"] = proof.leaf_count;
    j["index"] = proof.identifier_index;
    auto path = nlohmann::ordered_json::array();
    for (const auto& step : proof.path) {
        nlohmann::ordered_json e;
        e["dir"] = step.direction == Direction::Left ? "L" : "R";
        e["h"] = to_hex(step.digest);
        path.push_back(std::move(e));
    }
    j["path"] = std::move(path);
    return j.dump();
}

inline OwnershipProof proof_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw MalformedProof("$", "expected an object");
    auto field = [&j](const char* name) -> const nlohmann::json& {
        auto it = j.find(name);
        if (it == j.end()) throw MalformedProof(name, "missing");
        return *it;
    };
    if (j.size() != 5) throw MalformedProof("$", "expected exactly the keys v, suite, leaves, index, path");

    const auto& v = field("v");
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() != 1) throw MalformedProof("v", "unsupported version");

    const auto& suite_j = field("suite");
    if (!suite_j.is_string()) throw MalformedProof("suite", "expected a string");
    HashSuite suite;
    try {
        suite = parse_suite(suite_j.get<std::string>());
    } catch (const UnknownSuite& e) {
        throw MalformedProof("suite", e.what());
    }

    const auto& leaves_j = field("leaves");
    if (!leaves_j.is_number_unsigned()) throw MalformedProof("leaves", "expected a non-negative integer");
    const auto leaves = static_cast<std::size_t>(leaves_j.get<std::uint64_t>());
    if (!valid_leaf_count(leaves)) throw MalformedProof("leaves", "must be a power of two in [2, 2^32]");

    const auto& index_j = field("index");
    if (!index_j.is_number_unsigned()) throw MalformedProof("index", "expected a non-negative integer");
    const auto index = index_j.get<std::uint64_t>();
    if (index >= leaves / 2) throw MalformedProof("index", "out of range for leaf count");

    const auto& path_j = field("path");
    if (!path_j.is_array()) throw MalformedProof("path", "expected an array");
    const std::size_t height = static_cast<std::size_t>(std::countr_zero(leaves));
    if (path_j.size() != height)
        throw MalformedProof("path", "length " + std::to_string(path_j.size()) + ", expected " + std::to_string(height));

    OwnershipProof proof{suite.id, leaves, static_cast<std::size_t>(index), {}};
    proof.path.reserve(height);
    Bytes raw;
    for (std::size_t i = 0; i < path_j.size(); ++i) {
        const auto& e = path_j[i];
        const std::string where = "path[" + std::to_string(i) + "]";
        if (!e.is_object() || e.size() != 2) throw MalformedProof(where, "expected {\"dir\",\"h\"}");
        auto dir = e.find("dir");
        auto h = e.find("h");
        if (dir == e.end() || !dir->is_string()) throw MalformedProof(where + ".dir", "expected \"L\" or \"R\"");
        if (h == e.end() || !h->is_string()) throw MalformedProof(where + ".h", "expected a hex string");
        const auto& d = dir->get_ref<const std::string&>();
        if (d != "L" && d != "R") throw MalformedProof(where + ".dir", "expected \"L\" or \"R\"");
        if (!from_hex(h->get_ref<const std::string&>(), raw, true))
            throw MalformedProof(where + ".h", "invalid lowercase hex");
        if (raw.size() != suite.digest_len) throw MalformedProof(where + ".h", "wrong digest length for suite");
        proof.path.push_back({d == "L" ? Direction::Left : Direction::Right, Digest(raw)});
    }
    return proof;
}

inline OwnershipProof parse_proof(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedProof("$", e.what());
    }
    return proof_from_json(j);
}

} // namespace mpseudo
