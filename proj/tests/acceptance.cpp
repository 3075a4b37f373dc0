// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>

#include "mpseudo/bench.hpp"
#include "mpseudo/proof.hpp"
#include "mpseudo/scenario.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace mpseudo;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
    bool warn_only = false;
};

Digest flip_bit(const Digest& d, std::mt19937_64& rng)
{
    Bytes raw(d.bytes().begin(), d.bytes().end());
    raw[rng() % raw.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    return Digest(raw);
}

const HashSuite& pick_suite(std::mt19937_64& rng) { return rng() % 2 ? kClassical256 : kPostQuantum384; }

Outcome ac1_oracle_equivalence()
{
    std::mt19937_64 rng(101);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t checked = 0;
    for (std::size_t n = 1; n <= 16; ++n) {
        for (int i = 0; i < 100; ++i) {
            const auto& suite = pick_suite(rng);
            const auto key = oracle::random_key(rng, suite);
            const auto ids = oracle::random_identifiers(rng, n);
            if (build_tree(suite, key, ids).pseudonym().root != oracle::root(suite, key, ids))
                return {false, "mismatch at N=" + std::to_string(n)};
            ++checked;
        }
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu instances equal, %.2f s", checked, s);
    return {s < 10.0, buf};
}

Outcome ac2_completeness()
{
    std::mt19937_64 rng(102);
    std::size_t checked = 0;
    for (std::size_t n = 1; n <= 16; ++n) {
        for (const auto& suite : {kClassical256, kPostQuantum384}) {
            const auto key = oracle::random_key(rng, suite);
            const auto ids = oracle::random_identifiers(rng, n);
            const auto tree = build_tree(suite, key, ids);
            for (std::size_t i = 0; i < n; ++i) {
                if (!verify(tree.pseudonym(), ids[i], prove(tree, i)))
                    return {false, "rejected N=" + std::to_string(n) + " index " + std::to_string(i)};
                ++checked;
            }
        }
    }
    return {true, std::to_string(checked) + " honest proofs accepted, 0 failures"};
}

Outcome ac3_soundness()
{
    std::mt19937_64 rng(103);
    std::size_t accepted = 0, total = 0;
    std::size_t per_kind[4] = {0, 0, 0, 0};
    while (total < 10000) {
        const std::size_t n = 2 + rng() % 15;
        const auto& suite = pick_suite(rng);
        const auto key = oracle::random_key(rng, suite);
        const auto ids = oracle::random_identifiers(rng, n);
        const auto tree = build_tree(suite, key, ids);
        const auto p = tree.pseudonym();
        const std::size_t i = rng() % n;
        auto proof = prove(tree, i);
        Identifier claimed = ids[i];
        const std::size_t kind = total % 4;
        switch (kind) {
        case 0: { // bit-flipped path
            auto& step = proof.path[rng() % proof.path.size()];
            step.digest = flip_bit(step.digest, rng);
            break;
        }
        case 1: // swapped identifier
            claimed = ids[(i + 1 + rng() % (n - 1)) % n];
            break;
        case 2: // wrong suite
            proof.suite_id = suite.id == SuiteId::Classical256 ? SuiteId::PostQuantum384 : SuiteId::Classical256;
            break;
        default: // wrong index
            proof.identifier_index = (i + 1 + rng() % (n - 1)) % n;
            break;
        }
        if (verify(p, claimed, proof)) ++accepted;
        ++per_kind[kind];
        ++total;
    }
    return {accepted == 0, std::to_string(total) + " forgeries (" + std::to_string(per_kind[0]) + " bit-flip, " +
                               std::to_string(per_kind[1]) + " swapped id, " + std::to_string(per_kind[2]) +
                               " wrong suite, " + std::to_string(per_kind[3]) + " wrong index), " +
                               std::to_string(accepted) + " accepted"};
}

Outcome ac4_proof_size()
{
    const auto ids = synthetic_identifiers(8);
    const auto tree = build_tree(kPostQuantum384, random_key(kPostQuantum384), ids);
    const auto proof = parse_proof(serialize_proof(prove(tree, 0)));
    std::size_t bytes = 0;
    for (const auto& s : proof.path) bytes += s.digest.size();
    const bool ok = proof.path.size() == 4 && bytes == 192 && proof.digest_bytes() == 192;
    return {ok, std::to_string(proof.path.size()) + " x 48 = " + std::to_string(bytes) + " bytes"};
}

Outcome ac5_timing()
{
    const auto report = run_bench(128, kClassical256, kBenchMinRepetitions);
    double worst_build = 0, worst_verify = 0;
    for (const auto& r : report.rows) {
        worst_build = std::max(worst_build, r.build_ms);
        worst_verify = std::max(worst_verify, r.verify_ms);
    }
    const auto& last = report.rows.back();
    char buf[160];
    std::snprintf(buf, sizeof buf, "N=%zu build %.3f ms, verify %.4f ms (worst over N<=128: %.3f / %.4f ms)",
                  last.n_identifiers, last.build_ms, last.verify_ms, worst_build, worst_verify);
    Outcome o{worst_build < 1000.0 && worst_verify < 40.0, buf};
    const char* ci = std::getenv("CI");
    o.warn_only = ci != nullptr && *ci != '\0';
    return o;
}

Outcome ac6_unlinkability_basis()
{
    std::mt19937_64 rng(106);
    const auto ids = oracle::random_identifiers(rng, 4);
    std::set<std::string> roots;
    for (int i = 0; i < 1000; ++i) roots.insert(to_hex(build_tree(kClassical256, random_key(kClassical256), ids).pseudonym().root));
    return {roots.size() == 1000, std::to_string(roots.size()) + "/1000 distinct roots"};
}

Outcome ac7_distinctness()
{
    std::mt19937_64 rng(107);
    std::set<std::string> roots;
    std::size_t equal_pairs = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t na = 1 + rng() % 8, nb = 1 + rng() % 8;
        auto a = oracle::random_identifiers(rng, na);
        auto b = oracle::random_identifiers(rng, nb);
        if (a == b) b.front().attributes.front() += "'";
        const auto ra = build_tree(kClassical256, random_key(kClassical256), a).pseudonym();
        const auto rb = build_tree(kClassical256, random_key(kClassical256), b).pseudonym();
        if (ra == rb) ++equal_pairs;
        roots.insert(to_hex(ra.root));
        roots.insert(to_hex(rb.root));
    }
    return {equal_pairs == 0 && roots.size() == 2000,
            std::to_string(equal_pairs) + " equal pairs, " + std::to_string(roots.size()) + "/2000 distinct roots"};
}

Outcome ac8_padding()
{
    for (std::size_t n = 1; n <= 1024; ++n) {
        const auto plan = plan_leaves(n);
        const std::size_t expected =
            oracle::is_power_of_two_brute(n) ? 2 * n : std::size_t{1} << (oracle::min_m_brute(n) + 1);
        if (plan.leaf_count != expected || plan.pad_slots != expected - 2 * n)
            return {false, "disagreement at N=" + std::to_string(n)};
    }
    return {true, "N=1..1024 agree with brute-force minimum-m search"};
}

Outcome ac9_scenarios()
{
    std::string detail;
    bool ok = true;
    for (const std::string name : {"university_income", "pay_how_you_drive"}) {
        const auto text = testutil::slurp(testutil::source_path("scenarios/" + name + ".json"));
        const auto golden = testutil::slurp(testutil::source_path("tests/golden/" + name + ".jsonl"));
        const auto a = sim::run_scenario(sim::parse_scenario(std::string_view(text)));
        const auto b = sim::run_scenario(sim::parse_scenario(std::string_view(text)));
        const bool stable = !golden.empty() && a.transcript_text() == golden && b.transcript_text() == golden;
        ok = ok && stable && a.ok();
        if (!detail.empty()) detail += "; ";
        detail += name + ": " + std::to_string(a.transcript.size()) + " messages, " +
                  (stable ? "golden match" : "GOLDEN MISMATCH") + ", " +
                  (a.expectations_passed() ? "expectations pass" : "EXPECTATION FAILED") + ", " +
                  (a.audit_clean() ? "audit clean" : std::to_string(a.leaks.size()) + " leaks");
    }
    return {ok, detail};
}

std::string mutate(std::string s, std::mt19937_64& rng)
{
    static const std::string alphabet = "0123456789abcdefLR{}[]\",:-. vxA";
    const int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits && !s.empty(); ++e) {
        const std::size_t pos = rng() % s.size();
        switch (rng() % 5) {
        case 0: s[pos] = alphabet[rng() % alphabet.size()]; break;
        case 1: s.erase(pos, 1); break;
        case 2: s.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
        case 3: s.resize(pos); break;
        default: s[pos] = static_cast<char>(rng()); break;
        }
    }
    return s;
}

Outcome ac10_fuzz()
{
    std::mt19937_64 rng(110);
    std::size_t parse_errors = 0, rejected = 0, intact = 0, unexpected = 0;
    for (int round = 0; round < 10; ++round) {
        const std::size_t n = 1 + rng() % 16;
        const auto& suite = pick_suite(rng);
        const auto ids = oracle::random_identifiers(rng, n);
        const auto tree = build_tree(suite, oracle::random_key(rng, suite), ids);
        const std::size_t idx = rng() % n;
        const auto proof = prove(tree, idx);
        const std::string proof_text = serialize_proof(proof);
        const std::string pseud_text = serialize_pseudonym(tree.pseudonym());
        for (int k = 0; k < 1000; ++k) {
            const bool hit_proof = k % 2 == 0;
            const std::string ps = hit_proof ? pseud_text : mutate(pseud_text, rng);
            const std::string pr = hit_proof ? mutate(proof_text, rng) : proof_text;
            try {
                const Pseudonym p = parse_pseudonym(ps);
                const OwnershipProof q = parse_proof(pr);
                if (verify(p, ids[idx], q)) {
                    // Only edits that leave both values unchanged may verify.
                    if (p == tree.pseudonym() && q == proof) ++intact;
                    else ++unexpected;
                } else {
                    ++rejected;
                }
            } catch (const MalformedProof&) {
                ++parse_errors;
            } catch (const MalformedPseudonym&) {
                ++parse_errors;
            } catch (const std::exception&) {
                ++unexpected;
            }
        }
    }
    return {unexpected == 0, "10000 mutations: " + std::to_string(parse_errors) + " parse errors, " +
                                 std::to_string(rejected) + " rejections, " + std::to_string(intact) +
                                 " value-preserving, " + std::to_string(unexpected) + " unexpected"};
}

} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1 oracle equivalence", ac1_oracle_equivalence},
        {"AC2 completeness", ac2_completeness},
        {"AC3 soundness sampling", ac3_soundness},
        {"AC4 proof size N=8 mp-sha384", ac4_proof_size},
        {"AC5 timing N<=128 mp-sha256", ac5_timing},
        {"AC6 unlinkability basis", ac6_unlinkability_basis},
        {"AC7 distinctness", ac7_distinctness},
        {"AC8 padding rule", ac8_padding},
        {"AC9 scenario golden tests", ac9_scenarios},
        {"AC10 fuzz robustness", ac10_fuzz},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const char* tag = o.pass ? "PASS" : (o.warn_only ? "WARN" : "FAIL");
        std::cout << tag << "  " << name << ": " << o.detail << "\n";
        if (!o.pass && !o.warn_only) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    return failed == 0 ? 0 : 1;
}
