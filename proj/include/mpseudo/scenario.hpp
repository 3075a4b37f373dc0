#pragma once

// Declarative scenario runner.
//
// Scenario file:
//   {
//     "name": "...", "suite": "mp-sha256",
//     "orgs": [{"id": "university"}, ...],
//     "subjects": [{
//        "handle": "alice",
//        "key_seed": "<hex>",                       // sim-only, makes keys reproducible
//        "identifiers": {"<org>": {"domain": ..., "attributes": [...]}, ...},
//        "attributes":  {"<org>": {"annual_income": 12000}, ...},
//        "pseudonyms":  {"P2": ["university", "finance"], ...}   // identifier order
//     }],
//     "steps": [ {"op": "register" | "cross_prove" | "threshold_query" | "collect"
//                       | "deliver" | "delete_raw" | "expect", ...}, ... ]
//   }
//
// Action steps take an optional "expect" outcome token ("accepted",
// "rejected:bad_proof", "above", "refused:unknown_pseudonym", ...). The
// transcript is one JSON object per message.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"
#include "mpseudo/proof.hpp"
#include "mpseudo/registry.hpp"
#include "mpseudo/tree.hpp"

namespace mpseudo::sim {

struct SubjectDecl {
    std::string handle;
    Bytes key_seed;
    std::map<std::string, Identifier> identifiers;
    std::map<std::string, std::map<std::string, std::int64_t>> attributes;
    std::vector<std::pair<std::string, std::vector<std::string>>> pseudonyms;
};

struct Scenario {
    std::string name;
    HashSuite suite = kClassical256;
    std::vector<std::string> orgs;
    std::vector<SubjectDecl> subjects;
    std::vector<nlohmann::json> steps;
};

struct Simulation {
    std::map<std::string, OrgRegistry> orgs;
    std::map<std::string, UserAgent> users;
};

struct ExpectOutcome {
    std::size_t step;
    bool passed;
    std::string detail;
};

struct ScenarioResult {
    std::vector<std::string> transcript;
    std::vector<ExpectOutcome> expectations;
    std::vector<std::string> leaks;
    Simulation state;

    bool expectations_passed() const
    {
        for (const auto& e : expectations)
            if (!e.passed) return false;
        return true;
    }
    bool audit_clean() const { return leaks.empty(); }
    bool ok() const { return expectations_passed() && audit_clean(); }

    std::string transcript_text() const
    {
        std::string out;
        for (const auto& line : transcript) out += line + "\n";
        return out;
    }
};

// Per-pseudonym key for scenario users: HMAC-SHA-256(seed, "mpseudo-sim-key:" || label).
inline MacKey scenario_key(const HashSuite& suite, ByteView seed, const std::string& label)
{
    const std::string info = "mpseudo-sim-key:" + label;
    const Digest d = hmac_raw(kClassical256, seed, as_bytes(info));
    return MacKey(suite, d.bytes().first(suite.key_len));
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, std::size_t step)
{
    auto it = j.find(key);
    if (it == j.end()) throw ScenarioError(step, std::string("missing field '") + key + "'");
    return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t step)
{
    const auto& v = require(j, key, step);
    if (!v.is_string()) throw ScenarioError(step, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j)
{
    using detail::require;
    using detail::require_string;
    constexpr auto top = ScenarioError::npos;
    if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");

    Scenario sc;
    if (auto it = j.find("name"); it != j.end() && it->is_string()) sc.name = it->get<std::string>();
    if (auto it = j.find("suite"); it != j.end()) {
        if (!it->is_string()) throw ScenarioError("suite must be a string");
        try {
            sc.suite = parse_suite(it->get<std::string>());
        } catch (const UnknownSuite& e) {
            throw ScenarioError(e.what());
        }
    }

    std::set<std::string> orgs;
    if (auto it = j.find("orgs"); it != j.end()) {
        if (!it->is_array()) throw ScenarioError("orgs must be an array");
        for (const auto& o : *it) {
            const auto id = o.is_string() ? o.get<std::string>() : require_string(o, "id", top);
            if (!orgs.insert(id).second) throw ScenarioError("duplicate org '" + id + "'");
            sc.orgs.push_back(id);
        }
    }

    std::map<std::string, std::set<std::string>> labels_by_subject;
    if (auto it = j.find("subjects"); it != j.end()) {
        if (!it->is_array()) throw ScenarioError("subjects must be an array");
        for (const auto& s : *it) {
            SubjectDecl d;
            d.handle = require_string(s, "handle", top);
            if (labels_by_subject.contains(d.handle)) throw ScenarioError("duplicate subject '" + d.handle + "'");
            if (!from_hex(require_string(s, "key_seed", top), d.key_seed) || d.key_seed.empty())
                throw ScenarioError("subject '" + d.handle + "': key_seed must be non-empty hex");
            try {
                for (const auto& [org, idj] : require(s, "identifiers", top).items()) {
                    if (!orgs.contains(org)) throw ScenarioError("subject '" + d.handle + "': unknown org '" + org + "'");
                    d.identifiers.emplace(org, identifier_from_json(idj));
                }
                if (auto a = s.find("attributes"); a != s.end()) {
                    for (const auto& [org, table] : a->items()) {
                        if (!orgs.contains(org)) throw ScenarioError("subject '" + d.handle + "': unknown org '" + org + "'");
                        for (const auto& [name, value] : table.items()) {
                            if (!value.is_number_integer())
                                throw ScenarioError("attribute '" + name + "' must be an integer");
                            d.attributes[org][name] = value.get<std::int64_t>();
                        }
                    }
                }
                auto& labels = labels_by_subject[d.handle];
                if (auto p = s.find("pseudonyms"); p != s.end()) {
                    for (const auto& [label, list] : p->items()) {
                        std::vector<std::string> members;
                        for (const auto& org : list) {
                            const auto o = org.get<std::string>();
                            if (!d.identifiers.contains(o))
                                throw ScenarioError("pseudonym '" + label + "': no identifier for org '" + o + "'");
                            members.push_back(o);
                        }
                        if (members.empty()) throw ScenarioError("pseudonym '" + label + "' has no identifiers");
                        labels.insert(label);
                        d.pseudonyms.emplace_back(label, std::move(members));
                    }
                }
            } catch (const nlohmann::json::exception& e) {
                throw ScenarioError("subject '" + d.handle + "': " + e.what());
            } catch (const ScenarioError&) {
                throw;
            } catch (const Error& e) {
                throw ScenarioError("subject '" + d.handle + "': " + e.what());
            }
            sc.subjects.push_back(std::move(d));
        }
    }

    if (auto it = j.find("steps"); it != j.end()) {
        if (!it->is_array()) throw ScenarioError("steps must be an array");
        std::size_t i = 0;
        for (const auto& step : *it) {
            if (!step.is_object()) throw ScenarioError(i, "step must be an object");
            const auto op = require_string(step, "op", i);
            auto check_org = [&](const char* key) {
                const auto org = require_string(step, key, i);
                if (!orgs.contains(org)) throw ScenarioError(i, "unknown org '" + org + "'");
            };
            auto check_pseudonym = [&]() {
                const auto subject = require_string(step, "subject", i);
                auto s = labels_by_subject.find(subject);
                if (s == labels_by_subject.end()) throw ScenarioError(i, "unknown subject '" + subject + "'");
                const auto label = require_string(step, "pseudonym", i);
                if (!s->second.contains(label))
                    throw ScenarioError(i, "unknown pseudonym '" + label + "' for subject '" + subject + "'");
            };
            if (op == "register" || op == "cross_prove") {
                check_org("org");
                check_pseudonym();
            } else if (op == "threshold_query") {
                check_org("asking");
                check_org("answering");
                check_pseudonym();
                if (!require(step, "threshold", i).is_number_integer())
                    throw ScenarioError(i, "threshold must be an integer");
                require_string(step, "attribute", i);
            } else if (op == "collect" || op == "delete_raw") {
                check_org("org");
                check_pseudonym();
            } else if (op == "deliver") {
                check_org("from");
                check_org("to");
                check_pseudonym();
                require_string(step, "attribute", i);
                if (!require(step, "value", i).is_number_integer())
                    throw ScenarioError(i, "value must be an integer");
            } else if (op == "expect") {
                check_org("org");
            } else {
                throw ScenarioError(i, "unknown op '" + op + "'");
            }
            sc.steps.push_back(step);
            ++i;
        }
    }
    return sc;
}

inline Scenario parse_scenario(std::string_view text)
{
    try {
        return parse_scenario(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("invalid JSON: ") + e.what());
    }
}

namespace detail {

inline bool contains_bytes(std::string_view hay, ByteView needle)
{
    if (needle.empty()) return false;
    std::string_view n(reinterpret_cast<const char*>(needle.data()), needle.size());
    return hay.find(n) != std::string_view::npos;
}

class Runner {
public:
    explicit Runner(const Scenario& sc) : sc_(sc)
    {
        for (const auto& org : sc.orgs) state_.orgs.emplace(org, OrgRegistry(org));
        for (const auto& s : sc.subjects) {
            UserAgent user(s.handle, sc.suite);
            for (const auto& [org, id] : s.identifiers) {
                user.add_identifier(org, id);
                state_.orgs.at(org).add_subject(s.handle, id);
            }
            for (const auto& [org, table] : s.attributes)
                for (const auto& [name, value] : table) state_.orgs.at(org).set_attribute(s.handle, name, value);
            for (const auto& [label, members] : s.pseudonyms)
                user.derive(label, scenario_key(sc.suite, s.key_seed, label), members);
            state_.users.emplace(s.handle, std::move(user));
        }
    }

    ScenarioResult run()
    {
        for (std::size_t i = 0; i < sc_.steps.size(); ++i) {
            step_ = i;
            try {
                execute(sc_.steps[i]);
            } catch (const ScenarioError&) {
                throw;
            } catch (const Error& e) {
                throw ScenarioError(i, e.what());
            } catch (const nlohmann::json::exception& e) {
                throw ScenarioError(i, e.what());
            }
        }
        result_.leaks = audit();
        result_.state = std::move(state_);
        return std::move(result_);
    }

private:
    static std::string user_party(const std::string& handle) { return "user:" + handle; }

    void send(const std::string& from, const std::string& to, const std::string& kind, nlohmann::ordered_json body)
    {
        nlohmann::ordered_json m;
        m["seq"] = seq_++;
        m["step"] = step_;
        m["from"] = from;
        m["to"] = to;
        m["kind"] = kind;
        m["body"] = std::move(body);
        result_.transcript.push_back(m.dump());
        parties_.push_back({from, to});
    }

    static nlohmann::ordered_json pseudonym_json(const Pseudonym& p)
    {
        return nlohmann::ordered_json::parse(serialize_pseudonym(p));
    }

    static nlohmann::ordered_json proof_json(const OwnershipProof& p)
    {
        return nlohmann::ordered_json::parse(serialize_proof(p));
    }

    void expect_outcome(const nlohmann::json& step, const std::string& got)
    {
        auto it = step.find("expect");
        if (it == step.end()) return;
        const auto want = it->get<std::string>();
        result_.expectations.push_back({step_, want == got, "expected " + want + ", got " + got});
    }

    void check(bool passed, std::string detail) { result_.expectations.push_back({step_, passed, std::move(detail)}); }

    const UserAgent& user(const nlohmann::json& step) { return state_.users.at(step.at("subject").get<std::string>()); }
    OrgRegistry& org(const nlohmann::json& step, const char* key)
    {
        return state_.orgs.at(step.at(key).get<std::string>());
    }

    // Concatenated transcript lines in which `org_id` is sender or receiver.
    std::string view_of(const std::string& org_id) const
    {
        std::string view;
        for (std::size_t i = 0; i < parties_.size(); ++i)
            if (parties_[i].first == org_id || parties_[i].second == org_id) view += result_.transcript[i] + "\n";
        return view;
    }

    void execute(const nlohmann::json& step)
    {
        const auto op = step.at("op").get<std::string>();
        if (op == "register") {
            const UserAgent& u = user(step);
            OrgRegistry& o = org(step, "org");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            const auto proof = u.proof_for(p, o.id(), optional_index(step));
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["proof"] = proof_json(proof);
            send(user_party(u.handle()), o.id(), "register", std::move(body));
            const Decision d = o.register_pseudonym(u.handle(), p, proof);
            send(o.id(), user_party(u.handle()), "register_result", {{"result", d.token()}});
            expect_outcome(step, d.token());
        } else if (op == "cross_prove") {
            const UserAgent& u = user(step);
            OrgRegistry& o = org(step, "org");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            std::optional<std::size_t> index = optional_index(step);
            if (!index) {
                // "via": prove along the path of another organisation's identifier.
                if (auto via = step.find("via"); via != step.end()) {
                    const Identifier* id = u.identifier_for(via->get<std::string>());
                    const PseudonymTree* t = u.tree_for(p);
                    if (id != nullptr && t != nullptr) index = t->index_of(*id);
                }
            }
            const auto proof = u.proof_for(p, o.id(), index);
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["proof"] = proof_json(proof);
            send(user_party(u.handle()), o.id(), "ownership_proof", std::move(body));
            const Decision d = o.link_foreign(u.handle(), p, proof);
            send(o.id(), user_party(u.handle()), "link_result", {{"result", d.token()}});
            expect_outcome(step, d.token());
        } else if (op == "threshold_query") {
            const UserAgent& u = user(step);
            OrgRegistry& asking = org(step, "asking");
            OrgRegistry& answering = org(step, "answering");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            const auto attribute = step.at("attribute").get<std::string>();
            const auto threshold = step.at("threshold").get<std::int64_t>();
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["attribute"] = attribute;
            body["threshold"] = threshold;
            send(asking.id(), answering.id(), "threshold_query", std::move(body));
            const QueryResult r = threshold_query(asking, answering, p, attribute, threshold);
            send(answering.id(), asking.id(), "threshold_answer", {{"answer", r.token()}});
            expect_outcome(step, r.token());
        } else if (op == "collect") {
            const UserAgent& u = user(step);
            OrgRegistry& o = org(step, "org");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            auto records = step.at("records").get<std::vector<std::string>>();
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["records"] = records;
            send(user_party(u.handle()), o.id(), "raw_data", std::move(body));
            o.collect_raw(p, std::move(records));
        } else if (op == "deliver") {
            const UserAgent& u = user(step);
            OrgRegistry& from = org(step, "from");
            OrgRegistry& to = org(step, "to");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            const auto attribute = step.at("attribute").get<std::string>();
            const auto value = step.at("value").get<std::int64_t>();
            if (!from.subject_of(p)) throw ScenarioError(step_, from.id() + " does not hold this pseudonym");
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["attribute"] = attribute;
            body["value"] = value;
            send(from.id(), to.id(), "pseudonymised_result", std::move(body));
            if (auto subject = to.subject_of(p)) {
                to.set_attribute(*subject, attribute, value);
            } else {
                to.hold_pending(p, attribute, value);
            }
        } else if (op == "delete_raw") {
            const UserAgent& u = user(step);
            OrgRegistry& o = org(step, "org");
            const Pseudonym& p = u.pseudonym(step.at("pseudonym").get<std::string>());
            const std::size_t n = o.delete_raw(p);
            nlohmann::ordered_json body;
            body["pseudonym"] = pseudonym_json(p);
            body["deleted_records"] = n;
            send(o.id(), o.id(), "delete_raw", std::move(body));
        } else if (op == "expect") {
            run_expect(step);
        }
    }

    static std::optional<std::size_t> optional_index(const nlohmann::json& step)
    {
        auto it = step.find("index");
        if (it == step.end()) return std::nullopt;
        return it->get<std::size_t>();
    }

    void run_expect(const nlohmann::json& step)
    {
        const OrgRegistry& o = org(step, "org");
        bool any = false;
        if (auto it = step.find("linked"); it != step.end()) {
            any = true;
            const auto subject = it->at("subject").get<std::string>();
            const Pseudonym& p = state_.users.at(subject).pseudonym(it->at("pseudonym").get<std::string>());
            const auto got = o.subject_of(p);
            check(got && *got == subject, o.id() + " links " + it->at("pseudonym").get<std::string>() + " to " + subject);
        }
        if (auto it = step.find("not_linked"); it != step.end()) {
            any = true;
            const auto subject = it->at("subject").get<std::string>();
            const Pseudonym& p = state_.users.at(subject).pseudonym(it->at("pseudonym").get<std::string>());
            check(!o.subject_of(p), o.id() + " does not link " + it->at("pseudonym").get<std::string>());
        }
        if (auto it = step.find("attribute"); it != step.end()) {
            any = true;
            const auto subject = it->at("subject").get<std::string>();
            const auto name = it->at("name").get<std::string>();
            const auto want = it->at("value").get<std::int64_t>();
            const auto got = o.attribute(subject, name);
            check(got && *got == want, o.id() + " holds " + name + "=" + std::to_string(want) + " for " + subject);
        }
        if (auto it = step.find("raw_records"); it != step.end()) {
            any = true;
            const auto want = it->get<std::size_t>();
            check(o.raw_record_count() == want, o.id() + " holds " + std::to_string(want) + " raw records, has " +
                                                    std::to_string(o.raw_record_count()));
        }
        if (auto it = step.find("view_excludes"); it != step.end()) {
            any = true;
            const std::string view = view_of(o.id());
            for (const auto& needle : *it) {
                const auto s = needle.get<std::string>();
                check(view.find(s) == std::string::npos, o.id() + " view excludes '" + s + "'");
            }
        }
        if (auto it = step.find("view_contains"); it != step.end()) {
            any = true;
            const std::string view = view_of(o.id());
            for (const auto& needle : *it) {
                const auto s = needle.get<std::string>();
                check(view.find(s) != std::string::npos, o.id() + " view contains '" + s + "'");
            }
        }
        if (!any) throw ScenarioError(step_, "expect step has no assertion");
    }

    // Searches every organisation's view for identifiers it does not hold and
    // for any user key.
    std::vector<std::string> audit() const
    {
        std::vector<std::string> leaks;
        for (const auto& [org_id, o] : state_.orgs) {
            const std::string view = view_of(org_id);
            for (const auto& [handle, u] : state_.users) {
                for (const auto& [label, t] : u.trees()) {
                    if (contains_bytes(view, t.key().bytes()) || view.find(to_hex(t.key().bytes())) != std::string::npos)
                        leaks.push_back(org_id + ": key of " + handle + "/" + label);
                }
                for (const auto& [owner, id] : u.identifiers()) {
                    bool known = false;
                    for (const auto& [s, k] : o.known_identifiers()) known |= (k == id);
                    if (known) continue;
                    const Bytes enc = encode(id);
                    const Digest dig = hash(sc_.suite, enc);
                    const std::string where = org_id + ": identifier of " + handle + " at " + owner;
                    if (contains_bytes(view, enc) || view.find(to_hex(enc)) != std::string::npos)
                        leaks.push_back(where + " (encoding)");
                    if (view.find(to_hex(dig)) != std::string::npos) leaks.push_back(where + " (digest)");
                    for (const auto& a : id.attributes)
                        if (view.find(a) != std::string::npos) leaks.push_back(where + " (attribute '" + a + "')");
                }
            }
        }
        return leaks;
    }

    const Scenario& sc_;
    Simulation state_;
    ScenarioResult result_;
    std::vector<std::pair<std::string, std::string>> parties_;
    std::size_t step_ = 0;
    std::uint64_t seq_ = 0;
};

} // namespace detail

inline ScenarioResult run_scenario(const Scenario& scenario)
{
    return detail::Runner(scenario).run();
}

// Pairs of organisations that hold a common pseudonym for the same subject.
inline std::vector<std::pair<std::string, std::string>> linkable_org_pairs(const Simulation& sim)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (auto a = sim.orgs.begin(); a != sim.orgs.end(); ++a) {
        for (auto b = std::next(a); b != sim.orgs.end(); ++b) {
            bool shared = false;
            for (const auto& [handle, u] : sim.users) {
                auto pa = a->second.pseudonyms_of(handle);
                auto pb = b->second.pseudonyms_of(handle);
                for (const auto& p : pa)
                    for (const auto& q : pb) shared |= (p == q);
            }
            if (shared) out.emplace_back(a->first, b->first);
        }
    }
    return out;
}

} // namespace mpseudo::sim
