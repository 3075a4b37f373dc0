#pragma once

// Keyed Merkle tree whose root is a user-generated pseudonym.
//
// Each identifier id_j (0-based) owns the leaf pair (2j, 2j+1):
//   leaf[2j]   = H(encode(id_j))
//   leaf[2j+1] = H_k(encode(id_j))
// Leaves past 2N are padding, filled with H_k(0x00 || "pad" || u64be(leaf index)).
// Inner nodes are H(left || right).

#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"

namespace mpseudo {

struct LeafPlan {
    std::size_t leaf_count;
    std::size_t identifier_slots;
    std::size_t pad_slots;

    std::size_t height() const noexcept { return static_cast<std::size_t>(std::countr_zero(leaf_count)); }

    friend bool operator==(const LeafPlan&, const LeafPlan&) = default;
};

// For N a power of two the tree has exactly 2N leaves. Otherwise pick the
// smallest m with N < 2^m and use 2^(m+1) leaves. Both cases equal
// 2 * bit_ceil(N).
inline LeafPlan plan_leaves(std::size_t n_identifiers)
{
    if (n_identifiers == 0) throw Error("at least one identifier is required");
    if (n_identifiers > (std::numeric_limits<std::size_t>::max() >> 2)) throw Error("too many identifiers");
    const std::size_t leaves = 2 * std::bit_ceil(n_identifiers);
    return {leaves, n_identifiers, leaves - 2 * n_identifiers};
}

enum class Direction : std::uint8_t { Left, Right };

// One authentication-path step. `direction` is the side the sibling sits on
// when the running digest is folded with it.
struct PathStep {
    Direction direction;
    Digest digest;

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct Pseudonym {
    Digest root;
    SuiteId suite_id;
    std::size_t leaf_count;

    friend bool operator==(const Pseudonym&, const Pseudonym&) = default;
    friend bool operator<(const Pseudonym& a, const Pseudonym& b) noexcept
    {
        if (a.suite_id != b.suite_id) return a.suite_id < b.suite_id;
        if (a.leaf_count != b.leaf_count) return a.leaf_count < b.leaf_count;
        return a.root < b.root;
    }
};

inline Bytes pad_leaf_input(std::size_t leaf_index)
{
    Bytes in{0x00, 'p', 'a', 'd'};
    for (int shift = 56; shift >= 0; shift -= 8)
        in.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(leaf_index) >> shift) & 0xff));
    return in;
}

class PseudonymTree {
public:
    PseudonymTree(const HashSuite& suite, MacKey key, std::vector<Identifier> identifiers)
        : suite_(suite), key_(std::move(key)), identifiers_(std::move(identifiers)),
          plan_(plan_leaves(identifiers_.size()))
    {
        if (key_.size() != suite_.key_len) throw KeyLengthError(key_.size(), suite_.key_len);

        std::vector<Bytes> encoded;
        encoded.reserve(identifiers_.size());
        std::map<Bytes, std::size_t> seen;
        for (std::size_t j = 0; j < identifiers_.size(); ++j) {
            encoded.push_back(encode(identifiers_[j]));
            auto [it, inserted] = seen.emplace(encoded.back(), j);
            if (!inserted) throw DuplicateIdentifier(it->second, j);
        }

        std::vector<Digest> leaves;
        leaves.reserve(plan_.leaf_count);
        for (const auto& enc : encoded) {
            leaves.push_back(hash(suite_, enc));
            leaves.push_back(mac(suite_, key_, enc));
        }
        for (std::size_t l = leaves.size(); l < plan_.leaf_count; ++l)
            leaves.push_back(mac(suite_, key_, pad_leaf_input(l)));

        levels_.reserve(plan_.height() + 1);
        levels_.push_back(std::move(leaves));
        while (levels_.back().size() > 1) {
            const auto& below = levels_.back();
            std::vector<Digest> above;
            above.reserve(below.size() / 2);
            for (std::size_t i = 0; i < below.size(); i += 2)
                above.push_back(hash_pair(suite_, below[i], below[i + 1]));
            levels_.push_back(std::move(above));
        }
    }

    const HashSuite& suite() const noexcept { return suite_; }
    const MacKey& key() const noexcept { return key_; }
    const std::vector<Identifier>& identifiers() const noexcept { return identifiers_; }
    const LeafPlan& plan() const noexcept { return plan_; }
    std::size_t leaf_count() const noexcept { return plan_.leaf_count; }
    std::size_t height() const noexcept { return plan_.height(); }

    // levels()[0] are the leaves, levels()[height()] holds only the root.
    const std::vector<std::vector<Digest>>& levels() const noexcept { return levels_; }

    Pseudonym pseudonym() const { return {levels_.back().front(), suite_.id, plan_.leaf_count}; }

    // Path from identifier `index` to the root: the MAC leaf first, then one
    // sibling per level above the leaves.
    std::vector<PathStep> auth_path(std::size_t index) const
    {
        if (index >= identifiers_.size()) throw IndexOutOfRange(index, identifiers_.size());
        std::vector<PathStep> path;
        path.reserve(height());
        std::size_t node = 2 * index;
        for (std::size_t level = 0; level < height(); ++level, node >>= 1) {
            const bool node_is_left = (node & 1) == 0;
            path.push_back({node_is_left ? Direction::Right : Direction::Left, levels_[level][node ^ 1]});
        }
        return path;
    }

    // Index of `id` in the identifier list, if present.
    std::optional<std::size_t> index_of(const Identifier& id) const
    {
        for (std::size_t j = 0; j < identifiers_.size(); ++j)
            if (identifiers_[j] == id) return j;
        return std::nullopt;
    }

private:
    HashSuite suite_;
    MacKey key_;
    std::vector<Identifier> identifiers_;
    LeafPlan plan_;
    std::vector<std::vector<Digest>> levels_;
};

inline PseudonymTree build_tree(const HashSuite& suite, const MacKey& key, std::vector<Identifier> identifiers)
{
    return PseudonymTree(suite, key, std::move(identifiers));
}

inline Pseudonym root(const PseudonymTree& tree) { return tree.pseudonym(); }

inline std::vector<PathStep> auth_path(const PseudonymTree& tree, std::size_t identifier_index)
{
    return tree.auth_path(identifier_index);
}

// Upper bound for leaf counts accepted from untrusted input.
inline constexpr std::size_t kMaxLeafCount = std::size_t{1} << 32;

inline bool valid_leaf_count(std::size_t leaves) noexcept
{
    return leaves >= 2 && leaves <= kMaxLeafCount && std::has_single_bit(leaves);
}

// {"v":1,"suite":"mp-sha256","leaves":8,"root":"<hex>"}
inline std::string serialize_pseudonym(const Pseudonym& p)
{
    nlohmann::ordered_json j;
    j["v"] = 1;
    j["suite"] = suite_token(p.suite_id);
    j["leaves"] = p.leaf_count;
    j["root"] = to_hex(p.root);
    return j.dump();
}

inline Pseudonym pseudonym_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw MalformedPseudonym("$", "expected an object");
    auto field = [&j](const char* name) -> const nlohmann::json& {
        auto it = j.find(name);
        if (it == j.end()) throw MalformedPseudonym(name, "missing");
        return *it;
    };
    const auto& v = field("v");
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() != 1) throw MalformedPseudonym("v", "unsupported version");

    const auto& suite_j = field("suite");
    if (!suite_j.is_string()) throw MalformedPseudonym("suite", "expected a string");
    HashSuite suite;
    try {
        suite = parse_suite(suite_j.get<std::string>());
    } catch (const UnknownSuite& e) {
        throw MalformedPseudonym("suite", e.what());
    }

    const auto& leaves_j = field("leaves");
    if (!leaves_j.is_number_unsigned()) throw MalformedPseudonym("leaves", "expected a non-negative integer");
    const auto leaves = leaves_j.get<std::uint64_t>();
    if (!valid_leaf_count(static_cast<std::size_t>(leaves)))
        throw MalformedPseudonym("leaves", "must be a power of two in [2, 2^32]");

    const auto& root_j = field("root");
    if (!root_j.is_string()) throw MalformedPseudonym("root", "expected a hex string");
    Bytes raw;
    if (!from_hex(root_j.get<std::string>(), raw, true)) throw MalformedPseudonym("root", "invalid lowercase hex");
    if (raw.size() != suite.digest_len) throw MalformedPseudonym("root", "wrong digest length for suite");

    if (j.size() != 4) throw MalformedPseudonym("$", "unexpected extra fields");
    return {Digest(raw), suite.id, static_cast<std::size_t>(leaves)};
}

inline Pseudonym parse_pseudonym(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedPseudonym("$", e.what());
    }
    return pseudonym_from_json(j);
}

} // namespace mpseudo
