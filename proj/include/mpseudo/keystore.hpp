#pragma once

// File-backed store of per-pseudonym secret keys.
//
// The store is one JSON file mapping labels to records. Key bytes are sealed
// with AES-256-GCM under a PBKDF2-HMAC-SHA256 passphrase key whose salt and
// iteration count live in the file header. An unencrypted mode exists for
// tests and throwaway stores.
//
// Losing the store (or its passphrase) makes every pseudonym derived from it
// unprovable. There is no recovery path.

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"

namespace mpseudo {

struct KeyRecord {
    std::string label;
    HashSuite suite;
    MacKey key;
    std::string created_at;
    std::vector<Digest> identifier_fingerprints;
};

// What list_keys exposes: never key bytes.
struct KeyInfo {
    std::string label;
    SuiteId suite_id;
    std::string created_at;

    friend bool operator==(const KeyInfo&, const KeyInfo&) = default;
};

inline std::filesystem::path default_keystore_path()
{
    if (const char* env = std::getenv("MP_KEYSTORE"); env != nullptr && *env != '\0') return env;
    const char* home = std::getenv("HOME");
    return std::filesystem::path(home != nullptr ? home : ".") / ".merkle-pseudonym" / "keys.json";
}

inline std::string utc_timestamp_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

inline constexpr std::string_view kCheckLabel = "mpseudo-keystore-check";
inline constexpr std::size_t kGcmNonceLen = 12;
inline constexpr std::size_t kGcmTagLen = 16;

struct EvpCipherCtx {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    EvpCipherCtx() { if (ctx == nullptr) throw StorageFailure("EVP_CIPHER_CTX_new failed"); }
    ~EvpCipherCtx() { EVP_CIPHER_CTX_free(ctx); }
    EvpCipherCtx(const EvpCipherCtx&) = delete;
    EvpCipherCtx& operator=(const EvpCipherCtx&) = delete;
};

// Returns ciphertext || tag.
inline Bytes gcm_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plain)
{
    EvpCipherCtx c;
    int len = 0;
    Bytes out(plain.size() + kGcmTagLen);
    if (EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) != 1 ||
        EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.data(), nonce.data()) != 1 ||
        EVP_EncryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
        EVP_EncryptUpdate(c.ctx, out.data(), &len, plain.data(), static_cast<int>(plain.size())) != 1 ||
        EVP_EncryptFinal_ex(c.ctx, out.data() + len, &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, static_cast<int>(kGcmTagLen),
                            out.data() + plain.size()) != 1)
        throw StorageFailure("encryption failed");
    return out;
}

inline std::optional<Bytes> gcm_open(ByteView key, ByteView nonce, ByteView aad, ByteView sealed)
{
    if (sealed.size() < kGcmTagLen) return std::nullopt;
    const std::size_t n = sealed.size() - kGcmTagLen;
    Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(n), sealed.end());
    EvpCipherCtx c;
    int len = 0;
    Bytes out(n);
    if (EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) != 1 ||
        EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.data(), nonce.data()) != 1 ||
        EVP_DecryptUpdate(c.ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
        EVP_DecryptUpdate(c.ctx, out.data(), &len, sealed.data(), static_cast<int>(n)) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, static_cast<int>(kGcmTagLen), tag.data()) != 1)
        return std::nullopt;
    if (EVP_DecryptFinal_ex(c.ctx, out.data() + len, &len) != 1) {
        OPENSSL_cleanse(out.data(), out.size());
        return std::nullopt;
    }
    return out;
}

// Holds an exclusive advisory lock on `<store>.lock` for its lifetime.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& store)
    {
        const auto lock_path = store.string() + ".lock";
        fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
        if (fd_ < 0) throw StorageFailure("cannot open lock file " + lock_path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw StorageFailure("cannot lock " + lock_path);
        }
    }
    ~FileLock()
    {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace detail

struct KeyStoreOptions {
    // Unset means an unencrypted store. Ignored when opening an existing
    // unencrypted file; required for an existing encrypted one.
    std::optional<std::string> passphrase;
    unsigned kdf_iterations = 600000;
};

class KeyStore {
public:
    using Options = KeyStoreOptions;

    // Opens the store at `path`, creating an empty one in memory when the file
    // does not exist yet. The file is written on the first mutation.
    static KeyStore open(std::filesystem::path path, Options opts = {})
    {
        KeyStore ks(std::move(path));
        std::error_code ec;
        if (std::filesystem::exists(ks.path_, ec)) {
            ks.load(opts);
        } else if (opts.passphrase) {
            ks.encrypted_ = true;
            ks.iterations_ = opts.kdf_iterations;
            ks.salt_.resize(16);
            fill_random(ks.salt_);
            ks.derive(*opts.passphrase);
        }
        return ks;
    }

    KeyStore(KeyStore&& other) noexcept
        : path_(std::move(other.path_)), encrypted_(other.encrypted_), iterations_(other.iterations_),
          salt_(std::move(other.salt_)), check_(std::move(other.check_)), enc_key_(std::move(other.enc_key_)),
          records_(std::move(other.records_)) {}
    KeyStore& operator=(KeyStore&&) = delete;
    KeyStore(const KeyStore&) = delete;
    KeyStore& operator=(const KeyStore&) = delete;

    ~KeyStore()
    {
        if (!enc_key_.empty()) OPENSSL_cleanse(enc_key_.data(), enc_key_.size());
    }

    const std::filesystem::path& path() const noexcept { return path_; }
    bool encrypted() const noexcept { return encrypted_; }

    KeyRecord create_key(const std::string& label, const HashSuite& suite)
    {
        std::unique_lock lock(mutex_);
        if (label.empty()) throw StorageFailure("label must not be empty");
        if (records_.contains(label)) throw DuplicateLabel(label);
        KeyRecord rec{label, suite, random_key(suite), utc_timestamp_now(), {}};
        records_.emplace(label, seal(rec));
        try {
            persist();
        } catch (...) {
            records_.erase(label);
            throw;
        }
        return rec;
    }

    KeyRecord get_key(const std::string& label) const
    {
        std::shared_lock lock(mutex_);
        auto it = records_.find(label);
        if (it == records_.end()) throw UnknownLabel(label);
        return unseal(label, it->second);
    }

    void delete_key(const std::string& label)
    {
        std::unique_lock lock(mutex_);
        auto node = records_.extract(label);
        if (node.empty()) throw UnknownLabel(label);
        try {
            persist();
        } catch (...) {
            records_.insert(std::move(node));
            throw;
        }
    }

    std::vector<KeyInfo> list_keys() const
    {
        std::shared_lock lock(mutex_);
        std::vector<KeyInfo> out;
        out.reserve(records_.size());
        for (const auto& [label, s] : records_) out.push_back({label, s.suite.id, s.created_at});
        return out;
    }

    void set_fingerprints(const std::string& label, std::vector<Digest> fingerprints)
    {
        std::unique_lock lock(mutex_);
        auto it = records_.find(label);
        if (it == records_.end()) throw UnknownLabel(label);
        std::swap(it->second.fingerprints, fingerprints);
        try {
            persist();
        } catch (...) {
            std::swap(it->second.fingerprints, fingerprints);
            throw;
        }
    }

    // Exact bytes the store writes to disk for its current state.
    std::string serialized() const
    {
        std::shared_lock lock(mutex_);
        return render();
    }

private:
    struct Sealed {
        HashSuite suite;
        std::string created_at;
        std::vector<Digest> fingerprints;
        Bytes nonce; // empty when unencrypted
        Bytes body;  // key bytes, or ciphertext || tag
    };

    explicit KeyStore(std::filesystem::path path) : path_(std::move(path)) {}

    static Bytes aad_for(const std::string& label, const HashSuite& suite)
    {
        Bytes aad(label.begin(), label.end());
        aad.push_back(0);
        const auto tok = suite_token(suite);
        aad.insert(aad.end(), tok.begin(), tok.end());
        return aad;
    }

    void derive(const std::string& passphrase)
    {
        Bytes out(64);
        if (PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt_.data(),
                              static_cast<int>(salt_.size()), static_cast<int>(iterations_), EVP_sha256(),
                              static_cast<int>(out.size()), out.data()) != 1)
            throw StorageFailure("key derivation failed");
        enc_key_.assign(out.begin(), out.begin() + 32);
        const Digest check = hmac_raw(kClassical256, ByteView(out.data() + 32, 32), as_bytes(detail::kCheckLabel));
        check_.assign(check.bytes().begin(), check.bytes().end());
        OPENSSL_cleanse(out.data(), out.size());
    }

    Sealed seal(const KeyRecord& rec) const
    {
        Sealed s{rec.suite, rec.created_at, rec.identifier_fingerprints, {}, {}};
        if (!encrypted_) {
            s.body.assign(rec.key.bytes().begin(), rec.key.bytes().end());
            return s;
        }
        s.nonce.resize(detail::kGcmNonceLen);
        fill_random(s.nonce);
        s.body = detail::gcm_seal(enc_key_, s.nonce, aad_for(rec.label, rec.suite), rec.key.bytes());
        return s;
    }

    KeyRecord unseal(const std::string& label, const Sealed& s) const
    {
        KeyRecord rec{label, s.suite, {}, s.created_at, s.fingerprints};
        if (!encrypted_) {
            rec.key = MacKey(s.suite, s.body);
            return rec;
        }
        auto plain = detail::gcm_open(enc_key_, s.nonce, aad_for(label, s.suite), s.body);
        if (!plain) throw StorageFailure("record '" + label + "' failed authentication");
        try {
            rec.key = MacKey(s.suite, *plain);
        } catch (...) {
            OPENSSL_cleanse(plain->data(), plain->size());
            throw;
        }
        OPENSSL_cleanse(plain->data(), plain->size());
        return rec;
    }

    std::string render() const
    {
        nlohmann::ordered_json j;
        j["v"] = 1;
        nlohmann::ordered_json enc;
        if (encrypted_) {
            enc["alg"] = "aes-256-gcm";
            enc["kdf"] = "pbkdf2-hmac-sha256";
            enc["iterations"] = iterations_;
            enc["salt"] = to_hex(salt_);
            enc["check"] = to_hex(check_);
        } else {
            enc["alg"] = "none";
        }
        j["encryption"] = std::move(enc);
        nlohmann::ordered_json keys = nlohmann::ordered_json::object();
        for (const auto& [label, s] : records_) {
            nlohmann::ordered_json r;
            r["suite"] = suite_token(s.suite);
            r["created_at"] = s.created_at;
            auto fps = nlohmann::ordered_json::array();
            for (const auto& d : s.fingerprints) fps.push_back(to_hex(d));
            r["fingerprints"] = std::move(fps);
            if (encrypted_) {
                r["nonce"] = to_hex(s.nonce);
                r["ct"] = to_hex(s.body);
            } else {
                r["key"] = to_hex(s.body);
            }
            keys[label] = std::move(r);
        }
        j["keys"] = std::move(keys);
        return j.dump(2) + "\n";
    }

    void persist()
    {
        namespace fs = std::filesystem;
        std::error_code ec;
        if (path_.has_parent_path()) fs::create_directories(path_.parent_path(), ec);
        if (ec) throw StorageFailure("cannot create " + path_.parent_path().string() + ": " + ec.message());

        detail::FileLock lock(path_);
        const std::string data = render();
        const std::string tmp = path_.string() + ".tmp";
        int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
        if (fd < 0) throw StorageFailure("cannot write " + tmp);
        std::size_t off = 0;
        while (off < data.size()) {
            ssize_t n = ::write(fd, data.data() + off, data.size() - off);
            if (n <= 0) {
                ::close(fd);
                throw StorageFailure("short write to " + tmp);
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0 || ::close(fd) != 0) throw StorageFailure("cannot flush " + tmp);
        fs::rename(tmp, path_, ec);
        if (ec) throw StorageFailure("cannot replace " + path_.string() + ": " + ec.message());
    }

    void load(const Options& opts)
    {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw StorageFailure("cannot read " + path_.string());
        std::stringstream buf;
        buf << in.rdbuf();

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(buf.str());
            if (j.at("v").get<int>() != 1) throw StorageFailure("unsupported store version");
            const auto& enc = j.at("encryption");
            const auto alg = enc.at("alg").get<std::string>();
            if (alg == "aes-256-gcm") {
                if (!opts.passphrase) throw StorageFailure("store is encrypted; a passphrase is required");
                if (enc.at("kdf").get<std::string>() != "pbkdf2-hmac-sha256")
                    throw StorageFailure("unsupported kdf");
                encrypted_ = true;
                iterations_ = enc.at("iterations").get<unsigned>();
                salt_ = hex_field(enc.at("salt"));
                const Bytes stored_check = hex_field(enc.at("check"));
                derive(*opts.passphrase);
                if (stored_check.size() != check_.size() ||
                    CRYPTO_memcmp(stored_check.data(), check_.data(), check_.size()) != 0)
                    throw StorageFailure("wrong passphrase");
            } else if (alg != "none") {
                throw StorageFailure("unsupported encryption '" + alg + "'");
            }
            for (const auto& [label, r] : j.at("keys").items()) {
                Sealed s;
                s.suite = parse_suite(r.at("suite").get<std::string>());
                s.created_at = r.at("created_at").get<std::string>();
                for (const auto& fp : r.at("fingerprints")) {
                    Bytes raw = hex_field(fp);
                    if (raw.size() != s.suite.digest_len) throw StorageFailure("bad fingerprint length");
                    s.fingerprints.emplace_back(raw);
                }
                if (encrypted_) {
                    s.nonce = hex_field(r.at("nonce"));
                    s.body = hex_field(r.at("ct"));
                } else {
                    s.body = hex_field(r.at("key"));
                    if (s.body.size() != s.suite.key_len) throw StorageFailure("bad key length for '" + label + "'");
                }
                records_.emplace(label, std::move(s));
            }
        } catch (const nlohmann::json::exception& e) {
            throw StorageFailure("corrupt store " + path_.string() + ": " + e.what());
        } catch (const UnknownSuite& e) {
            throw StorageFailure(e.what());
        }
    }

    static Bytes hex_field(const nlohmann::json& j)
    {
        Bytes out;
        if (!from_hex(j.get<std::string>(), out)) throw StorageFailure("invalid hex in store");
        return out;
    }

    std::filesystem::path path_;
    bool encrypted_ = false;
    unsigned iterations_ = 0;
    Bytes salt_;
    Bytes check_;
    Bytes enc_key_;
    std::map<std::string, Sealed> records_;
    mutable std::shared_mutex mutex_;
};

} // namespace mpseudo
