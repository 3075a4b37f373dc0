#pragma once

// Hash suites: SHA-256/HMAC-SHA-256 ("mp-sha256") and SHA-384/HMAC-SHA-384
// ("mp-sha384"). Backed by OpenSSL's libcrypto.

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpseudo/errors.hpp"

namespace mpseudo {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

enum class SuiteId : std::uint8_t { Classical256, PostQuantum384 };

struct HashSuite {
    SuiteId id;
    std::size_t digest_len;
    std::size_t key_len;

    friend bool operator==(const HashSuite&, const HashSuite&) = default;
};

inline constexpr std::size_t kKeyLen = 32;
inline constexpr std::size_t kMaxDigestLen = 48;

inline constexpr HashSuite kClassical256{SuiteId::Classical256, 32, kKeyLen};
inline constexpr HashSuite kPostQuantum384{SuiteId::PostQuantum384, 48, kKeyLen};

inline constexpr HashSuite suite_of(SuiteId id) noexcept
{
    return id == SuiteId::Classical256 ? kClassical256 : kPostQuantum384;
}

inline std::string_view suite_token(SuiteId id) noexcept
{
    return id == SuiteId::Classical256 ? "mp-sha256" : "mp-sha384";
}

inline std::string_view suite_token(const HashSuite& s) noexcept { return suite_token(s.id); }

inline HashSuite parse_suite(std::string_view token)
{
    if (token == "mp-sha256") return kClassical256;
    if (token == "mp-sha384") return kPostQuantum384;
    throw UnknownSuite(std::string(token));
}

// Fixed-capacity digest; size() is the owning suite's digest_len.
class Digest {
public:
    Digest() = default;

    explicit Digest(ByteView bytes)
    {
        if (bytes.size() > kMaxDigestLen) throw Error("digest longer than 48 bytes");
        std::copy(bytes.begin(), bytes.end(), buf_.begin());
        len_ = static_cast<std::uint8_t>(bytes.size());
    }

    std::size_t size() const noexcept { return len_; }
    const std::uint8_t* data() const noexcept { return buf_.data(); }
    ByteView bytes() const noexcept { return {buf_.data(), len_}; }

    friend bool operator==(const Digest& a, const Digest& b) noexcept
    {
        return a.len_ == b.len_ && std::equal(a.buf_.begin(), a.buf_.begin() + a.len_, b.buf_.begin());
    }
    friend bool operator<(const Digest& a, const Digest& b) noexcept
    {
        return std::lexicographical_compare(a.buf_.begin(), a.buf_.begin() + a.len_,
                                            b.buf_.begin(), b.buf_.begin() + b.len_);
    }

private:
    std::array<std::uint8_t, kMaxDigestLen> buf_{};
    std::uint8_t len_ = 0;
};

// Digest comparison whose running time does not depend on where the inputs differ.
inline bool constant_time_equal(const Digest& a, const Digest& b) noexcept
{
    if (a.size() != b.size()) return false;
    return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

// Secret HMAC key. Wiped on destruction; no stream or JSON conversion exists.
class MacKey {
public:
    MacKey() = default;

    MacKey(const HashSuite& suite, ByteView bytes)
    {
        if (bytes.size() != suite.key_len) throw KeyLengthError(bytes.size(), suite.key_len);
        bytes_.assign(bytes.begin(), bytes.end());
    }

    MacKey(const MacKey&) = default;
    MacKey(MacKey&&) noexcept = default;
    MacKey& operator=(const MacKey& other)
    {
        if (this != &other) {
            wipe();
            bytes_ = other.bytes_;
        }
        return *this;
    }
    MacKey& operator=(MacKey&& other) noexcept
    {
        wipe();
        bytes_ = std::move(other.bytes_);
        return *this;
    }
    ~MacKey() { wipe(); }

    std::size_t size() const noexcept { return bytes_.size(); }
    ByteView bytes() const noexcept { return bytes_; }

    friend bool operator==(const MacKey& a, const MacKey& b) noexcept
    {
        return a.size() == b.size() && CRYPTO_memcmp(a.bytes_.data(), b.bytes_.data(), a.size()) == 0;
    }

private:
    void wipe() noexcept
    {
        if (!bytes_.empty()) OPENSSL_cleanse(bytes_.data(), bytes_.size());
    }

    Bytes bytes_;
};

namespace detail {

inline const EVP_MD* evp_md(const HashSuite& suite) noexcept
{
    return suite.id == SuiteId::Classical256 ? EVP_sha256() : EVP_sha384();
}

} // namespace detail

inline Digest hash(const HashSuite& suite, ByteView data)
{
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, detail::evp_md(suite), nullptr) != 1)
        throw Error("EVP_Digest failed");
    return Digest(ByteView(out.data(), len));
}

// Digest of the raw concatenation left || right; used for inner tree nodes.
inline Digest hash_pair(const HashSuite& suite, const Digest& left, const Digest& right)
{
    std::array<std::uint8_t, 2 * kMaxDigestLen> buf{};
    std::copy_n(left.data(), left.size(), buf.begin());
    std::copy_n(right.data(), right.size(), buf.begin() + static_cast<std::ptrdiff_t>(left.size()));
    return hash(suite, ByteView(buf.data(), left.size() + right.size()));
}

// HMAC with an arbitrary-length key, as defined by the HMAC standard.
inline Digest hmac_raw(const HashSuite& suite, ByteView key, ByteView data)
{
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    static const std::uint8_t empty = 0;
    const void* key_ptr = key.empty() ? &empty : key.data();
    if (HMAC(detail::evp_md(suite), key_ptr, static_cast<int>(key.size()), data.data(), data.size(),
             out.data(), &len) == nullptr)
        throw Error("HMAC failed");
    return Digest(ByteView(out.data(), len));
}

inline Digest mac(const HashSuite& suite, const MacKey& key, ByteView data)
{
    if (key.size() != suite.key_len) throw KeyLengthError(key.size(), suite.key_len);
    return hmac_raw(suite, key.bytes(), data);
}

inline void fill_random(std::span<std::uint8_t> out)
{
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) throw EntropyUnavailable();
}

inline MacKey random_key(const HashSuite& suite)
{
    Bytes buf(suite.key_len);
    fill_random(buf);
    MacKey key(suite, buf);
    OPENSSL_cleanse(buf.data(), buf.size());
    return key;
}

// Lowercase hex.
inline std::string to_hex(ByteView bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline std::string to_hex(const Digest& d) { return to_hex(d.bytes()); }

// Returns false on odd length or a non-hex character. Accepts only lowercase
// when strict_lower is set.
inline bool from_hex(std::string_view hex, Bytes& out, bool strict_lower = false)
{
    if (hex.size() % 2 != 0) return false;
    auto nibble = [strict_lower](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (!strict_lower && c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    out.clear();
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return false;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return true;
}

} // namespace mpseudo
