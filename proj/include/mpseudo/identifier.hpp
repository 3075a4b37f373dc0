#pragma once

// Canonical, injective byte encoding of composite identifiers.
//
// Layout (all lengths big-endian):
//   0x01 | u16 len(domain) | domain | u8 count | { u16 len(attr) | attr } * count
//
// Bytes are hashed verbatim. Callers that want case or whitespace
// insensitivity must normalise attributes before building an Identifier.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"

namespace mpseudo {

inline constexpr std::uint8_t kIdentifierEncodingVersion = 0x01;
inline constexpr std::size_t kMaxAttributes = 255;
inline constexpr std::size_t kMaxFieldLen = 65535;

struct Identifier {
    std::string domain_label;
    std::vector<std::string> attributes;

    Identifier() = default;
    Identifier(std::string domain, std::vector<std::string> attrs)
        : domain_label(std::move(domain)), attributes(std::move(attrs)) {}

    // Splits `joined` on `delimiter`, e.g. ("org.x", "Jane|Doe|AB123", "|").
    static Identifier split(std::string domain, std::string_view joined, std::string_view delimiter)
    {
        if (delimiter.empty()) throw Error("identifier delimiter must not be empty");
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            auto pos = joined.find(delimiter, start);
            if (pos == std::string_view::npos) {
                parts.emplace_back(joined.substr(start));
                break;
            }
            parts.emplace_back(joined.substr(start, pos - start));
            start = pos + delimiter.size();
        }
        return {std::move(domain), std::move(parts)};
    }

    friend bool operator==(const Identifier&, const Identifier&) = default;
};

// Throws if the identifier cannot be encoded.
inline void validate(const Identifier& id)
{
    if (id.domain_label.size() > kMaxFieldLen) throw DomainLabelTooLong();
    if (id.attributes.empty()) throw EmptyAttribute(static_cast<std::size_t>(-1));
    if (id.attributes.size() > kMaxAttributes) throw TooManyAttributes(id.attributes.size());
    for (std::size_t i = 0; i < id.attributes.size(); ++i) {
        if (id.attributes[i].empty()) throw EmptyAttribute(i);
        if (id.attributes[i].size() > kMaxFieldLen) throw AttributeTooLong(i);
    }
}

inline Bytes encode(const Identifier& id)
{
    validate(id);
    std::size_t total = 1 + 2 + id.domain_label.size() + 1;
    for (const auto& a : id.attributes) total += 2 + a.size();

    Bytes out;
    out.reserve(total);
    auto put_u16 = [&out](std::size_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    };
    auto put_str = [&out](const std::string& s) { out.insert(out.end(), s.begin(), s.end()); };

    out.push_back(kIdentifierEncodingVersion);
    put_u16(id.domain_label.size());
    put_str(id.domain_label);
    out.push_back(static_cast<std::uint8_t>(id.attributes.size()));
    for (const auto& a : id.attributes) {
        put_u16(a.size());
        put_str(a);
    }
    return out;
}

inline Identifier decode(ByteView data)
{
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* what) {
        if (data.size() - pos < n) throw MalformedEncoding(pos, std::string("truncated ") + what);
    };
    auto get_u16 = [&](const char* what) {
        need(2, what);
        std::size_t v = (std::size_t{data[pos]} << 8) | data[pos + 1];
        pos += 2;
        return v;
    };
    auto get_str = [&](std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
        pos += n;
        return s;
    };

    need(1, "version");
    if (data[pos] != kIdentifierEncodingVersion) throw MalformedEncoding(pos, "unknown version byte");
    ++pos;

    Identifier id;
    id.domain_label = get_str(get_u16("domain length"), "domain label");
    need(1, "attribute count");
    std::size_t count = data[pos++];
    if (count == 0) throw MalformedEncoding(pos - 1, "attribute count is zero");
    id.attributes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t len = get_u16("attribute length");
        if (len == 0) throw MalformedEncoding(pos - 2, "empty attribute");
        id.attributes.push_back(get_str(len, "attribute"));
    }
    if (pos != data.size()) throw MalformedEncoding(pos, "trailing bytes");
    return id;
}

// Digest of the encoded identifier; the even leaf of its pair.
inline Digest identifier_digest(const HashSuite& suite, const Identifier& id)
{
    return hash(suite, encode(id));
}

// JSON form: {"domain": "...", "attributes": ["...", ...]}
inline nlohmann::json to_json_value(const Identifier& id)
{
    return nlohmann::json{{"domain", id.domain_label}, {"attributes", id.attributes}};
}

inline Identifier identifier_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw Error("identifier must be a JSON object");
    auto dom = j.find("domain");
    auto attrs = j.find("attributes");
    if (dom == j.end() || !dom->is_string()) throw Error("identifier.domain must be a string");
    if (attrs == j.end() || !attrs->is_array()) throw Error("identifier.attributes must be an array");
    Identifier id;
    id.domain_label = dom->get<std::string>();
    for (const auto& a : *attrs) {
        if (!a.is_string()) throw Error("identifier.attributes entries must be strings");
        id.attributes.push_back(a.get<std::string>());
    }
    validate(id);
    return id;
}

inline std::vector<Identifier> identifiers_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) throw Error("identifier list must be a JSON array");
    std::vector<Identifier> ids;
    ids.reserve(j.size());
    for (const auto& e : j) ids.push_back(identifier_from_json(e));
    return ids;
}

} // namespace mpseudo
