#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mpseudo/crypto_suite.hpp"
#include "oracle.hpp"

using namespace mpseudo;

namespace {

Bytes unhex(const std::string& s)
{
    Bytes b;
    EXPECT_TRUE(from_hex(s, b));
    return b;
}

} // namespace

TEST(HashSuite, Parameters)
{
    EXPECT_EQ(kClassical256.digest_len, 32u);
    EXPECT_EQ(kPostQuantum384.digest_len, 48u);
    EXPECT_GE(kClassical256.key_len, 16u);
    EXPECT_EQ(kClassical256.key_len, 32u);
    EXPECT_EQ(kPostQuantum384.key_len, 32u);
    EXPECT_EQ(suite_token(kClassical256), "mp-sha256");
    EXPECT_EQ(suite_token(kPostQuantum384), "mp-sha384");
    EXPECT_EQ(parse_suite("mp-sha384"), kPostQuantum384);
    EXPECT_THROW(parse_suite("mp-sha512"), UnknownSuite);
    EXPECT_THROW(parse_suite("MP-SHA256"), UnknownSuite);
}

TEST(Hash, Sha256EmptyStringVector)
{
    EXPECT_EQ(to_hex(hash(kClassical256, {})), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Hash, Sha384AbcVector)
{
    EXPECT_EQ(to_hex(hash(kPostQuantum384, as_bytes("abc"))),
              "cb00753f45a35e8bb5a03d699ac65007272c32ab0eded1631a8b605a43ff5bed"
              "8086072ba1e7cc2358baeca134c825a7");
}

TEST(Hash, Sha384ZeroByteMatchesReferenceImplementation)
{
    const Bytes zero{0x00};
    const Bytes ref = oracle::sha384(zero);
    ASSERT_EQ(ref.size(), 48u);
    EXPECT_EQ(to_hex(ref), "bec021b4f368e3069134e012c2b4307083d3a9bdd206e24e5f0d86e13d6636655933ec2b413465966817a9c208a11717");
    EXPECT_EQ(hash(kPostQuantum384, zero).bytes().size(), 48u);
    EXPECT_EQ(to_hex(hash(kPostQuantum384, zero)), to_hex(ref));
}

TEST(Hash, Sha384AgreesWithReferenceOnRandomInputs)
{
    std::mt19937_64 rng(7);
    for (std::size_t len : {0u, 1u, 55u, 111u, 112u, 127u, 128u, 129u, 300u}) {
        const auto s = oracle::random_string(rng, len, len);
        EXPECT_EQ(to_hex(hash(kPostQuantum384, as_bytes(s))), to_hex(oracle::sha384(as_bytes(s)))) << len;
    }
}

TEST(Hash, DeterministicAndSized)
{
    std::mt19937_64 rng(1);
    for (const auto& suite : {kClassical256, kPostQuantum384}) {
        for (int i = 0; i < 50; ++i) {
            const auto s = oracle::random_string(rng, 0, 200);
            const auto a = hash(suite, as_bytes(s));
            EXPECT_EQ(a, hash(suite, as_bytes(s)));
            EXPECT_EQ(a.size(), suite.digest_len);
        }
    }
}

TEST(Hmac, Rfc4231Case1)
{
    const Bytes key(20, 0x0b);
    EXPECT_EQ(to_hex(hmac_raw(kClassical256, key, as_bytes("Hi There"))),
              "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
    EXPECT_EQ(to_hex(hmac_raw(kPostQuantum384, key, as_bytes("Hi There"))),
              "afd03944d84895626b0825f4ab46907f15f9dadbe4101ec682aa034c7cebc59c"
              "faea9ea9076ede7f4af152e8b2fa9cb6");
}

TEST(Hmac, Rfc4231Case2)
{
    EXPECT_EQ(to_hex(hmac_raw(kClassical256, as_bytes("Jefe"), as_bytes("what do ya want for nothing?"))),
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Mac, MatchesReferenceHmacSha384)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const MacKey k = oracle::random_key(rng, kPostQuantum384);
        const auto msg = oracle::random_string(rng, 0, 300);
        EXPECT_EQ(to_hex(mac(kPostQuantum384, k, as_bytes(msg))),
                  to_hex(oracle::hmac_sha384(k.bytes(), as_bytes(msg))));
    }
}

TEST(Mac, RejectsWrongKeyLength)
{
    EXPECT_THROW(MacKey(kClassical256, Bytes(16, 1)), KeyLengthError);
    EXPECT_THROW(MacKey(kClassical256, Bytes(33, 1)), KeyLengthError);
    EXPECT_THROW(mac(kClassical256, MacKey{}, as_bytes("x")), KeyLengthError);
}

TEST(Mac, DeterministicAndSized)
{
    const MacKey k = random_key(kPostQuantum384);
    const auto a = mac(kPostQuantum384, k, as_bytes("data"));
    EXPECT_EQ(a, mac(kPostQuantum384, k, as_bytes("data")));
    EXPECT_EQ(a.size(), 48u);
}

TEST(Mac, DistinctKeysGiveDistinctTags)
{
    for (const auto& suite : {kClassical256, kPostQuantum384}) {
        for (int i = 0; i < 1000; ++i) {
            const MacKey k1 = random_key(suite);
            const MacKey k2 = random_key(suite);
            ASSERT_FALSE(k1 == k2);
            ASSERT_NE(mac(suite, k1, as_bytes("same data")), mac(suite, k2, as_bytes("same data")));
        }
    }
}

TEST(RandomKey, LengthAndAcceptedByMac)
{
    for (const auto& suite : {kClassical256, kPostQuantum384}) {
        const MacKey k = random_key(suite);
        EXPECT_EQ(k.size(), suite.key_len);
        EXPECT_NO_THROW(mac(suite, k, as_bytes("x")));
    }
}

TEST(RandomKey, ThousandDistinct)
{
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(to_hex(random_key(kClassical256).bytes()));
    EXPECT_EQ(seen.size(), 1000u);
}

TEST(RandomKey, ConcurrentCallers)
{
    std::vector<std::vector<std::string>> out(4);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < out.size(); ++t)
        threads.emplace_back([&out, t] {
            for (int i = 0; i < 250; ++i) out[t].push_back(to_hex(random_key(kClassical256).bytes()));
        });
    for (auto& th : threads) th.join();
    std::set<std::string> all;
    for (const auto& v : out) all.insert(v.begin(), v.end());
    EXPECT_EQ(all.size(), 1000u);
}

TEST(Hex, RoundTripAndErrors)
{
    const Bytes b = unhex("00ff10ab");
    EXPECT_EQ(to_hex(b), "00ff10ab");
    Bytes tmp;
    EXPECT_FALSE(from_hex("abc", tmp));
    EXPECT_FALSE(from_hex("zz", tmp));
    EXPECT_TRUE(from_hex("AB", tmp));
    EXPECT_FALSE(from_hex("AB", tmp, true));
}

TEST(Digest, ConstantTimeEqual)
{
    const auto a = hash(kClassical256, as_bytes("a"));
    const auto b = hash(kClassical256, as_bytes("b"));
    EXPECT_TRUE(constant_time_equal(a, a));
    EXPECT_FALSE(constant_time_equal(a, b));
    EXPECT_FALSE(constant_time_equal(a, hash(kPostQuantum384, as_bytes("a"))));
}
