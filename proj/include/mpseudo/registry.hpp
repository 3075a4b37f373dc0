#pragma once

// In-process organisations and a user agent that owns pseudonym trees.
//
// Registration happens over a trusted in-process channel: the caller names
// the true subject handle, and the organisation checks the proof against the
// identifier it already holds for that subject.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"
#include "mpseudo/proof.hpp"
#include "mpseudo/tree.hpp"

namespace mpseudo::sim {

// accepted, or rejected with one of unknown_subject, bad_proof, already_registered.
struct Decision {
    bool accepted;
    std::string reason;

    static Decision accept() { return {true, {}}; }
    static Decision reject(std::string why) { return {false, std::move(why)}; }

    std::string token() const { return accepted ? std::string("accepted") : "rejected:" + reason; }
};

enum class ThresholdAnswer : std::uint8_t { Above, AtOrBelow, Refused };

struct QueryResult {
    ThresholdAnswer answer;
    std::string reason; // set when refused

    std::string token() const
    {
        switch (answer) {
        case ThresholdAnswer::Above: return "above";
        case ThresholdAnswer::AtOrBelow: return "at_or_below";
        case ThresholdAnswer::Refused: break;
        }
        return "refused:" + reason;
    }
};

struct Binding {
    std::string subject;
    OwnershipProof proof;
};

class OrgRegistry {
public:
    explicit OrgRegistry(std::string org_id) : org_id_(std::move(org_id)) {}

    const std::string& id() const noexcept { return org_id_; }

    void add_subject(const std::string& subject, Identifier id) { known_identifiers_[subject] = std::move(id); }

    void set_attribute(const std::string& subject, const std::string& name, std::int64_t value)
    {
        attributes_[subject][name] = value;
    }

    const Identifier* identifier_for(const std::string& subject) const
    {
        auto it = known_identifiers_.find(subject);
        return it == known_identifiers_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, Identifier>& known_identifiers() const noexcept { return known_identifiers_; }
    const std::map<Pseudonym, Binding>& registered() const noexcept { return registered_; }
    const std::map<Pseudonym, Binding>& linked() const noexcept { return linked_; }

    std::optional<std::int64_t> attribute(const std::string& subject, const std::string& name) const
    {
        auto s = attributes_.find(subject);
        if (s == attributes_.end()) return std::nullopt;
        auto a = s->second.find(name);
        if (a == s->second.end()) return std::nullopt;
        return a->second;
    }

    // Subject behind a pseudonym, whether registered here or linked from elsewhere.
    std::optional<std::string> subject_of(const Pseudonym& p) const
    {
        if (auto it = registered_.find(p); it != registered_.end()) return it->second.subject;
        if (auto it = linked_.find(p); it != linked_.end()) return it->second.subject;
        return std::nullopt;
    }

    // Pseudonyms (registered or linked) this organisation associates with `subject`.
    std::vector<Pseudonym> pseudonyms_of(const std::string& subject) const
    {
        std::vector<Pseudonym> out;
        for (const auto& [p, b] : registered_)
            if (b.subject == subject) out.push_back(p);
        for (const auto& [p, b] : linked_)
            if (b.subject == subject) out.push_back(p);
        return out;
    }

    // Attribute values received for a pseudonym not yet linked to a subject.
    void hold_pending(const Pseudonym& p, const std::string& name, std::int64_t value) { pending_[p][name] = value; }

    std::size_t pending_count() const noexcept { return pending_.size(); }

    // Raw records collected about a pseudonym (data-processor role).
    void collect_raw(const Pseudonym& p, std::vector<std::string> records)
    {
        auto& dst = raw_[p];
        dst.insert(dst.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    }

    std::size_t raw_record_count() const noexcept
    {
        std::size_t n = 0;
        for (const auto& [p, r] : raw_) n += r.size();
        return n;
    }

    std::size_t delete_raw(const Pseudonym& p)
    {
        auto it = raw_.find(p);
        if (it == raw_.end()) return 0;
        const std::size_t n = it->second.size();
        raw_.erase(it);
        return n;
    }

    Decision register_pseudonym(const std::string& subject, const Pseudonym& p, const OwnershipProof& proof)
    {
        const Identifier* id = identifier_for(subject);
        if (id == nullptr) return Decision::reject("unknown_subject");
        if (registered_.contains(p)) return Decision::reject("already_registered");
        if (!verify(p, *id, proof)) return Decision::reject("bad_proof");
        registered_.emplace(p, Binding{subject, proof});
        return Decision::accept();
    }

    // Links a pseudonym issued for another organisation to a local subject.
    Decision link_foreign(const std::string& subject, const Pseudonym& p, const OwnershipProof& proof)
    {
        const Identifier* id = identifier_for(subject);
        if (id == nullptr) return Decision::reject("unknown_subject");
        if (!verify(p, *id, proof)) return Decision::reject("bad_proof");
        if (!registered_.contains(p)) linked_.insert_or_assign(p, Binding{subject, proof});
        if (auto it = pending_.find(p); it != pending_.end()) {
            for (const auto& [name, value] : it->second) attributes_[subject][name] = value;
            pending_.erase(it);
        }
        return Decision::accept();
    }

private:
    std::string org_id_;
    std::map<std::string, Identifier> known_identifiers_;
    std::map<Pseudonym, Binding> registered_;
    std::map<Pseudonym, Binding> linked_;
    std::map<std::string, std::map<std::string, std::int64_t>> attributes_;
    std::map<Pseudonym, std::map<std::string, std::int64_t>> pending_;
    std::map<Pseudonym, std::vector<std::string>> raw_;
};

// The individual: holds one identifier per organisation and the secret trees.
class UserAgent {
public:
    UserAgent(std::string handle, HashSuite suite) : handle_(std::move(handle)), suite_(suite) {}

    const std::string& handle() const noexcept { return handle_; }
    const HashSuite& suite() const noexcept { return suite_; }

    void add_identifier(const std::string& org_id, Identifier id) { identifiers_[org_id] = std::move(id); }

    const Identifier* identifier_for(const std::string& org_id) const
    {
        auto it = identifiers_.find(org_id);
        return it == identifiers_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, Identifier>& identifiers() const noexcept { return identifiers_; }

    // Builds a tree over the identifiers used by `org_ids`, in that order.
    const Pseudonym& derive(const std::string& label, const MacKey& key, const std::vector<std::string>& org_ids)
    {
        std::vector<Identifier> ids;
        ids.reserve(org_ids.size());
        for (const auto& org : org_ids) {
            const Identifier* id = identifier_for(org);
            if (id == nullptr) throw Error("user " + handle_ + " has no identifier for " + org);
            ids.push_back(*id);
        }
        auto [it, inserted] = trees_.insert_or_assign(label, build_tree(suite_, key, std::move(ids)));
        pseudonyms_.insert_or_assign(label, it->second.pseudonym());
        return pseudonyms_.at(label);
    }

    const PseudonymTree* tree(const std::string& label) const
    {
        auto it = trees_.find(label);
        return it == trees_.end() ? nullptr : &it->second;
    }

    const PseudonymTree* tree_for(const Pseudonym& p) const
    {
        for (const auto& [label, t] : trees_)
            if (t.pseudonym() == p) return &t;
        return nullptr;
    }

    const Pseudonym& pseudonym(const std::string& label) const
    {
        auto it = pseudonyms_.find(label);
        if (it == pseudonyms_.end()) throw Error("unknown pseudonym label '" + label + "'");
        return it->second;
    }

    const std::map<std::string, PseudonymTree>& trees() const noexcept { return trees_; }

    // Proof for `p` along the path of the identifier `org_id` knows. An
    // explicit index overrides that choice. Without a usable path the user
    // falls back to index 0, which the organisation will reject.
    OwnershipProof proof_for(const Pseudonym& p, const std::string& org_id,
                             std::optional<std::size_t> index = std::nullopt) const
    {
        const PseudonymTree* t = tree_for(p);
        if (t == nullptr) throw Error("user " + handle_ + " does not own this pseudonym");
        if (!index) {
            const Identifier* id = identifier_for(org_id);
            if (id != nullptr) index = t->index_of(*id);
        }
        return prove(*t, index.value_or(0));
    }

private:
    std::string handle_;
    HashSuite suite_;
    std::map<std::string, Identifier> identifiers_;
    std::map<std::string, PseudonymTree> trees_;
    std::map<std::string, Pseudonym> pseudonyms_;
};

// User proves to `org` that `p` belongs to it, over the org's own identifier.
inline Decision register_pseudonym(OrgRegistry& org, const UserAgent& user, const Pseudonym& p)
{
    return org.register_pseudonym(user.handle(), p, user.proof_for(p, org.id()));
}

// User proves to `target` that a pseudonym used elsewhere is theirs, revealing
// only the path of the identifier `target` already knows. With target's own
// pseudonym this is the same check as registration.
inline Decision cross_prove(const UserAgent& user, OrgRegistry& target, const Pseudonym& foreign,
                            std::optional<std::size_t> index = std::nullopt)
{
    return target.link_foreign(user.handle(), foreign, user.proof_for(foreign, target.id(), index));
}

// One bit about `attribute` of the subject behind `p` at `answering`:
// strictly above `threshold`, or at-or-below it.
inline QueryResult threshold_query(const OrgRegistry& asking, const OrgRegistry& answering, const Pseudonym& p,
                                   const std::string& attribute, std::int64_t threshold)
{
    (void)asking;
    auto subject = answering.subject_of(p);
    if (!subject) return {ThresholdAnswer::Refused, "unknown_pseudonym"};
    auto value = answering.attribute(*subject, attribute);
    if (!value) return {ThresholdAnswer::Refused, "unknown_attribute"};
    return {*value > threshold ? ThresholdAnswer::Above : ThresholdAnswer::AtOrBelow, {}};
}

} // namespace mpseudo::sim
