#pragma once

// Command-line front end. Exit codes: 0 success/accept, 1 reject (or a
// failed scenario), 2 usage or input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mpseudo/bench.hpp"
#include "mpseudo/crypto_suite.hpp"
#include "mpseudo/errors.hpp"
#include "mpseudo/identifier.hpp"
#include "mpseudo/keystore.hpp"
#include "mpseudo/proof.hpp"
#include "mpseudo/scenario.hpp"
#include "mpseudo/tree.hpp"

namespace mpseudo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitError = 2;

namespace detail {

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << data;
    if (!out) throw Error("short write to " + path);
}

inline nlohmann::json read_json(const std::string& path)
{
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": invalid JSON: " + e.what());
    }
}

struct GlobalOpts {
    std::string keystore;
    bool no_encrypt = false;
};

inline KeyStore open_store(const GlobalOpts& g)
{
    const std::filesystem::path path = g.keystore.empty() ? default_keystore_path() : std::filesystem::path(g.keystore);
    KeyStore::Options opts;
    if (!g.no_encrypt) {
        const char* pass = std::getenv("MP_PASSPHRASE");
        if (pass != nullptr) opts.passphrase = pass;
        std::error_code ec;
        if (!opts.passphrase && !std::filesystem::exists(path, ec))
            throw Error("new keystore needs a passphrase: set MP_PASSPHRASE, or pass --no-encrypt");
    }
    return KeyStore::open(path, opts);
}

inline std::vector<Digest> fingerprints(const HashSuite& suite, const std::vector<Identifier>& ids)
{
    std::vector<Digest> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(identifier_digest(suite, id));
    return out;
}

// Builds the tree for `key_label` over the ids file, warning when the list
// differs from the one first used with that key.
inline PseudonymTree tree_from_store(KeyStore& store, const std::string& key_label, const std::string& ids_file,
                                     std::ostream& err)
{
    const KeyRecord rec = store.get_key(key_label);
    auto ids = identifiers_from_json(read_json(ids_file));
    const auto fps = fingerprints(rec.suite, ids);
    if (rec.identifier_fingerprints.empty()) {
        store.set_fingerprints(key_label, fps);
    } else if (rec.identifier_fingerprints != fps) {
        err << "warning: identifier list differs from the one first used with key '" << key_label
            << "'; the pseudonym will not match\n";
    }
    return build_tree(rec.suite, rec.key, std::move(ids));
}

} // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Merkle-tree pseudonyms: derive, prove and verify"};
    app.require_subcommand(1);
    detail::GlobalOpts g;
    app.add_option("--keystore", g.keystore, "Key store path (default: $MP_KEYSTORE or ~/.merkle-pseudonym/keys.json)");
    app.add_flag("--no-encrypt", g.no_encrypt, "Create/open the key store without passphrase encryption");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "Create a fresh secret key under a label");
    std::string kg_label, kg_suite = "mp-sha256";
    keygen->add_option("--label", kg_label, "Key label")->required();
    keygen->add_option("--suite", kg_suite, "mp-sha256 or mp-sha384");

    // keys list / delete
    auto* keys = app.add_subcommand("keys", "Inspect the key store");
    keys->require_subcommand(1);
    auto* keys_list = keys->add_subcommand("list", "List labels (never key bytes)");
    auto* keys_delete = keys->add_subcommand("delete", "Delete a key");
    std::string del_label;
    keys_delete->add_option("--label", del_label)->required();

    // pseudonym new
    auto* pseud = app.add_subcommand("pseudonym", "Pseudonym operations");
    pseud->require_subcommand(1);
    auto* pnew = pseud->add_subcommand("new", "Derive the pseudonym for a key and identifier list");
    std::string pn_label, pn_ids, pn_out;
    pnew->add_option("--key-label", pn_label)->required();
    pnew->add_option("--ids-file", pn_ids, "JSON array of identifiers; order is significant")->required();
    pnew->add_option("--out", pn_out, "Write pseudonym JSON here instead of stdout");

    // prove
    auto* provecmd = app.add_subcommand("prove", "Write an ownership proof for one identifier");
    std::string pr_label, pr_ids, pr_out;
    std::size_t pr_index = 0;
    provecmd->add_option("--key-label", pr_label)->required();
    provecmd->add_option("--ids-file", pr_ids)->required();
    provecmd->add_option("--index", pr_index, "0-based identifier index")->required();
    provecmd->add_option("--out", pr_out, "Output .mproof file")->required();

    // verify
    auto* verifycmd = app.add_subcommand("verify", "Check a proof against a pseudonym and a known identifier");
    std::string vf_pseud, vf_idjson, vf_id, vf_domain, vf_delim = "|", vf_proof;
    verifycmd->add_option("--pseudonym", vf_pseud)->required();
    auto* id_json_opt = verifycmd->add_option("--id-json", vf_idjson, "Identifier as a JSON object file");
    auto* id_str_opt = verifycmd->add_option("--id", vf_id, "Identifier attributes joined by --delimiter");
    verifycmd->add_option("--domain", vf_domain, "Domain label for --id");
    verifycmd->add_option("--delimiter", vf_delim, "Attribute delimiter for --id (default '|')");
    verifycmd->add_option("--proof", vf_proof)->required();
    id_json_opt->excludes(id_str_opt);

    // sim run
    auto* simcmd = app.add_subcommand("sim", "Run organisation scenarios");
    simcmd->require_subcommand(1);
    auto* simrun = simcmd->add_subcommand("run", "Run a scenario file and print its transcript");
    std::string sim_file, sim_transcript;
    simrun->add_option("scenario", sim_file)->required();
    simrun->add_option("--transcript", sim_transcript, "Write the JSON-lines transcript here instead of stdout");

    // bench
    auto* benchcmd = app.add_subcommand("bench", "Time tree construction and verification");
    std::size_t bn_max = 128, bn_reps = kBenchMinRepetitions;
    std::string bn_suite = "mp-sha256", bn_format = "csv";
    benchcmd->add_option("--max-n", bn_max, "Largest identifier count (<= 4096)");
    benchcmd->add_option("--suite", bn_suite);
    benchcmd->add_option("--format", bn_format)->check(CLI::IsMember({"csv", "json"}));
    benchcmd->add_option("--reps", bn_reps, "Timed repetitions per size (min 20)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        if (*keygen) {
            const HashSuite suite = parse_suite(kg_suite);
            KeyStore store = detail::open_store(g);
            const KeyRecord rec = store.create_key(kg_label, suite);
            out << "created key '" << rec.label << "' (" << suite_token(rec.suite) << ")\n";
            return kExitOk;
        }
        if (*keys_list) {
            KeyStore store = detail::open_store(g);
            for (const auto& k : store.list_keys())
                out << k.label << "\t" << suite_token(k.suite_id) << "\t" << k.created_at << "\n";
            return kExitOk;
        }
        if (*keys_delete) {
            KeyStore store = detail::open_store(g);
            store.delete_key(del_label);
            out << "deleted key '" << del_label << "'\n";
            return kExitOk;
        }
        if (*pnew) {
            KeyStore store = detail::open_store(g);
            const PseudonymTree tree = detail::tree_from_store(store, pn_label, pn_ids, err);
            const std::string text = serialize_pseudonym(tree.pseudonym()) + "\n";
            if (pn_out.empty()) {
                out << text;
            } else {
                detail::write_file(pn_out, text);
            }
            return kExitOk;
        }
        if (*provecmd) {
            KeyStore store = detail::open_store(g);
            const PseudonymTree tree = detail::tree_from_store(store, pr_label, pr_ids, err);
            detail::write_file(pr_out, serialize_proof(prove(tree, pr_index)) + "\n");
            return kExitOk;
        }
        if (*verifycmd) {
            const Pseudonym p = parse_pseudonym(detail::read_file(vf_pseud));
            Identifier id;
            if (!vf_idjson.empty()) {
                id = identifier_from_json(detail::read_json(vf_idjson));
            } else if (*id_str_opt) {
                id = Identifier::split(vf_domain, vf_id, vf_delim);
                validate(id);
            } else {
                err << "error: one of --id-json or --id is required\n";
                return kExitError;
            }
            const OwnershipProof proof = parse_proof(detail::read_file(vf_proof));
            const VerifyResult r = verify(p, id, proof);
            out << r.to_string() << "\n";
            return r.accepted ? kExitOk : kExitReject;
        }
        if (*simrun) {
            const sim::Scenario sc = sim::parse_scenario(std::string_view(detail::read_file(sim_file)));
            const sim::ScenarioResult res = sim::run_scenario(sc);
            if (sim_transcript.empty()) {
                out << res.transcript_text();
            } else {
                detail::write_file(sim_transcript, res.transcript_text());
            }
            std::size_t failed = 0;
            for (const auto& e : res.expectations) {
                if (!e.passed) {
                    ++failed;
                    err << "step " << e.step << ": FAILED " << e.detail << "\n";
                }
            }
            for (const auto& leak : res.leaks) err << "leak: " << leak << "\n";
            err << (sc.name.empty() ? std::string("scenario") : sc.name) << ": " << res.transcript.size()
                << " messages, " << res.expectations.size() - failed << "/" << res.expectations.size()
                << " expectations passed, audit " << (res.audit_clean() ? "clean" : "FAILED") << "\n";
            return res.ok() ? kExitOk : kExitReject;
        }
        if (*benchcmd) {
            const BenchReport report = run_bench(bn_max, parse_suite(bn_suite), bn_reps);
            out << (bn_format == "json" ? report.to_json() : report.to_csv());
            return kExitOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

} // namespace mpseudo::cli
