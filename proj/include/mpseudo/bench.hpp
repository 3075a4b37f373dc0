#pragma once

// Build/verify timing over synthetic identifier sets.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"
#include "mpseudo/proof.hpp"
#include "mpseudo/tree.hpp"

namespace mpseudo {

inline constexpr std::size_t kBenchMaxN = 4096;
inline constexpr std::size_t kBenchWarmups = 3;
inline constexpr std::size_t kBenchMinRepetitions = 20;

struct BenchRow {
    std::size_t n_identifiers;
    std::size_t leaf_count;
    SuiteId suite_id;
    double build_ms;
    double verify_ms;
    std::size_t proof_digest_bytes;
};

struct BenchReport {
    std::vector<BenchRow> rows;

    static constexpr const char* kCsvHeader = "n,leaves,suite,build_ms,verify_ms,proof_bytes";

    std::string to_csv() const
    {
        std::string out = std::string(kCsvHeader) + "\n";
        char line[160];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof line, "%zu,%zu,%s,%.4f,%.4f,%zu\n", r.n_identifiers, r.leaf_count,
                          std::string(suite_token(r.suite_id)).c_str(), r.build_ms, r.verify_ms,
                          r.proof_digest_bytes);
            out += line;
        }
        return out;
    }

    std::string to_json() const
    {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            nlohmann::ordered_json o;
            o["n"] = r.n_identifiers;
            o["leaves"] = r.leaf_count;
            o["suite"] = suite_token(r.suite_id);
            o["build_ms"] = r.build_ms;
            o["verify_ms"] = r.verify_ms;
            o["proof_bytes"] = r.proof_digest_bytes;
            arr.push_back(std::move(o));
        }
        return arr.dump(2) + "\n";
    }
};

// Powers of two up to max_n, plus max_n itself.
inline std::vector<std::size_t> bench_sizes(std::size_t max_n)
{
    if (max_n == 0 || max_n > kBenchMaxN) throw Error("max_n must be in [1, " + std::to_string(kBenchMaxN) + "]");
    std::vector<std::size_t> sizes;
    for (std::size_t n = 2; n <= max_n; n *= 2) sizes.push_back(n);
    if (sizes.empty() || sizes.back() != max_n) sizes.push_back(max_n);
    return sizes;
}

inline std::vector<Identifier> synthetic_identifiers(std::size_t n)
{
    std::vector<Identifier> ids;
    ids.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        ids.emplace_back("bench.org" + std::to_string(j), std::vector<std::string>{"subject-" + std::to_string(j)});
    return ids;
}

namespace detail {

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

template <typename F>
double time_ms(F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace detail

inline BenchRow bench_one(std::size_t n, const HashSuite& suite, std::size_t repetitions)
{
    repetitions = std::max(repetitions, kBenchMinRepetitions);
    const auto ids = synthetic_identifiers(n);
    const MacKey key = random_key(suite);

    for (std::size_t w = 0; w < kBenchWarmups; ++w) (void)build_tree(suite, key, ids);

    std::vector<double> build_times;
    build_times.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r)
        build_times.push_back(detail::time_ms([&] { (void)build_tree(suite, key, ids); }));

    const PseudonymTree tree = build_tree(suite, key, ids);
    const Pseudonym p = tree.pseudonym();
    std::vector<OwnershipProof> proofs;
    proofs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) proofs.push_back(prove(tree, i));

    bool all_ok = true;
    for (std::size_t w = 0; w < kBenchWarmups; ++w) all_ok &= verify(p, ids[w % n], proofs[w % n]).accepted;
    std::vector<double> verify_times;
    verify_times.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const std::size_t i = r % n;
        verify_times.push_back(detail::time_ms([&] { all_ok &= verify(p, ids[i], proofs[i]).accepted; }));
    }
    if (!all_ok) throw Error("benchmark proof failed to verify");

    return {n, tree.leaf_count(), suite.id, detail::median(std::move(build_times)),
            detail::median(std::move(verify_times)), tree.height() * suite.digest_len};
}

inline BenchReport run_bench(std::size_t max_n, const HashSuite& suite, std::size_t repetitions = kBenchMinRepetitions)
{
    BenchReport report;
    for (std::size_t n : bench_sizes(max_n)) report.rows.push_back(bench_one(n, suite, repetitions));
    return report;
}

} // namespace mpseudo
