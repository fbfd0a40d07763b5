#pragma once

// Nominal-predicate evaluation in the Gerber & Chai style: nominal-to-verbal
// conversion through a role mapping table, a 14-feature logistic fill/no-fill
// classifier, multi implicit-argument prediction on top of the event
// composition model, and P/R/F1 scoring.

#include <set>

#include "evimp/eventcomp.hpp"
#include "evimp/inference.hpp"
#include "evimp/tree.hpp"

namespace evimp::gc {

using corpus::ArgPosition;
using corpus::Event;

inline constexpr const char* kMappingHeader = "#evimp-gc-map v1";
inline constexpr const char* kFnfHeader = "#evimp-fnf v1";

// ---------------------------------------------------------------------------
// Role mapping table (nominal predicate -> verbal form, arg0..arg4 -> slots)

struct MappedPosition {
    ArgPosition slot = ArgPosition::subj;
    std::string prep;  // for pobj; empty means an unspecified preposition

    std::string role_name() const { return corpus::role_suffix(slot, prep); }

    bool operator==(const MappedPosition&) const = default;
};

struct PredicateMapping {
    std::string nominal;
    std::string verbal;
    std::array<std::optional<MappedPosition>, 5> roles;  // arg0..arg4
};

inline std::optional<MappedPosition> parse_mapped_position(const std::string& s) {
    if (s == "--" || s.empty()) return std::nullopt;
    MappedPosition m;
    if (s == "subj") {
        m.slot = ArgPosition::subj;
    } else if (s == "dobj") {
        m.slot = ArgPosition::dobj;
    } else if (s == "prep") {
        m.slot = ArgPosition::pobj;
    } else if (starts_with(s, "prep_")) {
        m.slot = ArgPosition::pobj;
        m.prep = s.substr(5);
    } else {
        throw FormatError("bad role mapping '" + s + "'");
    }
    return m;
}

using MappingTable = std::map<std::string, PredicateMapping>;

// The ten NomBank predicates with their verbal forms and role mappings.
inline MappingTable builtin_mappings() {
    static const char* rows[][7] = {
        {"bid", "bid", "subj", "prep_for", "dobj", "--", "--"},
        {"sale", "sell", "subj", "dobj", "prep_to", "prep_for", "prep"},
        {"loan", "loan", "subj", "dobj", "prep_to", "prep", "prep_at"},
        {"cost", "cost", "--", "subj", "dobj", "prep_to", "prep"},
        {"plan", "plan", "subj", "dobj", "prep_for", "prep_for", "--"},
        {"investor", "invest", "subj", "dobj", "prep_in", "--", "--"},
        {"price", "price", "subj", "dobj", "prep_at", "prep", "--"},
        {"loss", "lose", "subj", "dobj", "prep_to", "prep_on", "--"},
        {"investment", "invest", "subj", "dobj", "prep_in", "--", "--"},
        {"fund", "fund", "subj", "dobj", "prep", "prep_on", "--"},
    };
    MappingTable table;
    for (const auto& row : rows) {
        PredicateMapping m;
        m.nominal = row[0];
        m.verbal = row[1];
        for (int i = 0; i < 5; ++i) m.roles[static_cast<size_t>(i)] = parse_mapped_position(row[2 + i]);
        table.emplace(m.nominal, std::move(m));
    }
    return table;
}

inline MappingTable load_mappings(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, kMappingHeader))
        throw FormatError("mapping file " + path + ": missing header");
    MappingTable table;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split(line, '\t');
        if (f.size() != 7)
            throw FormatError("mapping file " + path + " line " + std::to_string(line_no) +
                              ": expected 7 tab-separated fields");
        PredicateMapping m;
        m.nominal = f[0];
        m.verbal = f[1];
        for (int i = 0; i < 5; ++i)
            m.roles[static_cast<size_t>(i)] = parse_mapped_position(f[2 + static_cast<size_t>(i)]);
        table.emplace(m.nominal, std::move(m));
    }
    return table;
}

inline void write_mappings(const std::string& path, const MappingTable& table) {
    atomic_write(path, [&](std::ostream& out) {
        out << kMappingHeader << "\n";
        for (const auto& [nominal, m] : table) {
            out << nominal << "\t" << m.verbal;
            for (const auto& role : m.roles)
                out << "\t" << (role ? role->role_name() : std::string("--"));
            out << "\n";
        }
    });
}

// ---------------------------------------------------------------------------
// Enriched document and converted instance

struct GCSentence {
    std::vector<std::string> tokens, lemmas, stems, pos;
    tree::Tree parse;
};

struct GCSpan {
    int sent = 0;
    int begin = 0;
    int end = 0;  // inclusive

    bool operator<(const GCSpan& o) const {
        return std::tie(sent, begin, end) < std::tie(o.sent, o.begin, o.end);
    }
    bool operator==(const GCSpan&) const = default;
};

struct GCCandidate {
    int id = 0;
    std::string lemma;               // surface lemma used for token construction
    salience::SalienceFeatures sal;
    int entity = -1;                 // backing document entity, -1 when promoted
};

struct OpenRole {
    std::string role;  // "arg0".."arg4"
    int n = 0;
    MappedPosition position;
};

struct GCInstance {
    std::string doc_id;
    std::vector<GCSentence> sentences;
    std::vector<corpus::Entity> entities;  // promoted chains, as in the corpus model
    std::vector<Event> events;             // context events for coherence scoring

    std::string nominal;
    std::string verbal;
    int pred_sent = 0;
    int pred_token = 0;

    Event skeleton;                   // verbal event with locally expressed arguments
    std::vector<OpenRole> open;       // implicit positions to decide
    std::map<std::string, std::set<int>> gold;  // role -> acceptable candidate ids
    std::vector<GCCandidate> candidates;
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Raw record parsing + conversion

namespace detail {

inline GCSentence sentence_from_json(const nlohmann::json& j, size_t sent_idx) {
    GCSentence s;
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.lemmas = j.value("lemmas", s.tokens);
    s.stems = j.value("stems", s.lemmas);
    s.pos = j.value("pos", std::vector<std::string>(s.tokens.size(), "NN"));
    if (s.lemmas.size() != s.tokens.size() || s.stems.size() != s.tokens.size() ||
        s.pos.size() != s.tokens.size())
        throw FormatError("sentence " + std::to_string(sent_idx) +
                          ": token/lemma/stem/pos lengths differ");
    const std::string tree_text = j.value("tree", std::string());
    if (!tree_text.empty()) {
        try {
            s.parse = tree::parse_tree(tree_text);
        } catch (const FormatError& e) {
            throw FormatError("sentence " + std::to_string(sent_idx) + ": " + e.what());
        }
        if (s.parse.n_tokens != static_cast<int>(s.tokens.size()))
            throw FormatError("sentence " + std::to_string(sent_idx) +
                              ": tree covers " + std::to_string(s.parse.n_tokens) +
                              " tokens, sentence has " + std::to_string(s.tokens.size()));
    }
    return s;
}

// Span head: the last noun-tagged token of the span, else the last token.
inline int span_head_token(const GCSentence& s, int begin, int end) {
    for (int t = end; t >= begin; --t)
        if (!s.pos[static_cast<size_t>(t)].empty() && s.pos[static_cast<size_t>(t)][0] == 'N')
            return t;
    return end;
}

inline salience::SalienceFeatures singleton_salience(int sent) {
    salience::SalienceFeatures f;
    f.first_loc = sent;
    f.head_count = 1;
    f.nominal = 1;
    f.total = 1;
    return f;
}

}  // namespace detail

// Converts one enriched record into a GCInstance: verbal skeleton with local
// arguments filled, open positions for unexpressed mapped roles, gold filler
// sets resolved to candidate ids, and the candidate list (document entities
// plus promoted gold spans that no chain covers).
inline GCInstance convert_instance(const nlohmann::json& record, const MappingTable& mappings) {
    GCInstance inst;
    inst.doc_id = record.value("doc_id", std::string("gc"));

    size_t sent_idx = 0;
    for (const nlohmann::json& sj : record.at("sentences"))
        inst.sentences.push_back(detail::sentence_from_json(sj, sent_idx++));

    // Entities and context events ride on the corpus ingestion path.
    corpus::RawDocumentRecord raw;
    raw.doc_id = inst.doc_id;
    raw.sentences_count = static_cast<int>(inst.sentences.size());
    if (record.contains("chains"))
        for (const nlohmann::json& chain : record.at("chains")) {
            std::vector<corpus::Mention> mentions;
            for (const nlohmann::json& m : chain)
                mentions.push_back(corpus::detail::mention_from_json(m));
            raw.chains.push_back(std::move(mentions));
        }
    if (record.contains("events"))
        for (const nlohmann::json& e : record.at("events"))
            raw.events.push_back(corpus::raw_event_from_json(e));
    const corpus::Script script = corpus::parse_document(raw);
    inst.entities = script.entities;
    inst.events = script.events;

    // chain index -> entity id (length->=2 chains only), mirroring promotion.
    std::unordered_map<int, int> chain_to_entity;
    {
        int next = 0;
        for (size_t c = 0; c < raw.chains.size(); ++c)
            if (raw.chains[c].size() >= 2) chain_to_entity[static_cast<int>(c)] = next++;
    }

    const nlohmann::json& pred = record.at("predicate");
    inst.nominal = lowercase(pred.at("nominal").get<std::string>());
    inst.pred_sent = pred.at("sent").get<int>();
    inst.pred_token = pred.at("token").get<int>();
    if (inst.pred_sent < 0 || inst.pred_sent >= static_cast<int>(inst.sentences.size()))
        throw FormatError("predicate sentence index out of range in " + inst.doc_id);

    auto mapping_it = mappings.find(inst.nominal);
    if (mapping_it == mappings.end())
        throw FormatError("unmapped nominal predicate '" + inst.nominal + "'");
    const PredicateMapping& mapping = mapping_it->second;
    inst.verbal = mapping.verbal;
    inst.skeleton.verb = mapping.verbal;

    auto role_number = [](const std::string& role) {
        if (role.size() == 4 && starts_with(role, "arg") && role[3] >= '0' && role[3] <= '4')
            return role[3] - '0';
        throw FormatError("bad role label '" + role + "'");
    };

    // Candidates: every document entity first, promoted spans appended later.
    for (const corpus::Entity& e : inst.entities) {
        GCCandidate c;
        c.id = e.id;
        c.entity = e.id;
        c.lemma = corpus::representative_lemma(e);
        c.sal = salience::extract_salience(e);
        inst.candidates.push_back(std::move(c));
    }
    std::map<GCSpan, int> promoted_spans;
    std::unordered_map<int, int> promoted_chains;  // short chain idx -> candidate id

    auto covering_entity = [&](const GCSpan& span) -> int {
        for (const corpus::Entity& e : inst.entities)
            for (const corpus::Mention& m : e.mentions)
                if (m.sentence_index == span.sent && m.token >= span.begin && m.token <= span.end)
                    return e.id;
        return -1;
    };
    auto promote_span = [&](const GCSpan& span) -> int {
        auto it = promoted_spans.find(span);
        if (it != promoted_spans.end()) return it->second;
        if (span.sent < 0 || span.sent >= static_cast<int>(inst.sentences.size()))
            throw FormatError("gold span sentence out of range in " + inst.doc_id);
        const GCSentence& s = inst.sentences[static_cast<size_t>(span.sent)];
        if (span.begin < 0 || span.end >= static_cast<int>(s.tokens.size()) ||
            span.begin > span.end)
            throw FormatError("gold span tokens out of range in " + inst.doc_id);
        GCCandidate c;
        c.id = static_cast<int>(inst.candidates.size());
        c.lemma = lowercase(s.lemmas[static_cast<size_t>(detail::span_head_token(s, span.begin, span.end))]);
        c.sal = detail::singleton_salience(span.sent);
        inst.candidates.push_back(c);
        promoted_spans.emplace(span, c.id);
        return c.id;
    };
    auto promote_chain = [&](int chain_idx) -> int {
        auto it = promoted_chains.find(chain_idx);
        if (it != promoted_chains.end()) return it->second;
        if (chain_idx < 0 || chain_idx >= static_cast<int>(raw.chains.size()))
            throw ReferenceError("gold filler references unknown chain " +
                                 std::to_string(chain_idx) + " in " + inst.doc_id);
        const auto& chain = raw.chains[static_cast<size_t>(chain_idx)];
        GCCandidate c;
        c.id = static_cast<int>(inst.candidates.size());
        c.lemma = lowercase(chain.front().head_lemma);
        c.sal = detail::singleton_salience(chain.front().sentence_index);
        inst.candidates.push_back(c);
        promoted_chains.emplace(chain_idx, c.id);
        return c.id;
    };

    // Locally expressed arguments fill the skeleton.
    std::array<bool, 3> slot_filled{false, false, false};
    if (record.contains("local_args"))
        for (const nlohmann::json& a : record.at("local_args")) {
            const std::string role = a.at("role").get<std::string>();
            const int n = role_number(role);
            const auto& mapped = mapping.roles[static_cast<size_t>(n)];
            if (!mapped) {
                inst.warnings.push_back("role " + role + " of '" + inst.nominal +
                                        "' has no mapping; skipped");
                continue;
            }
            const int slot_idx = static_cast<int>(mapped->slot);
            if (slot_filled[static_cast<size_t>(slot_idx)]) {
                inst.warnings.push_back("slot " + std::string(corpus::to_string(mapped->slot)) +
                                        " already filled; " + role + " skipped");
                continue;
            }
            corpus::Argument filler;
            const int chain = a.value("chain", -1);
            const std::string prep = mapped->slot == ArgPosition::pobj ? mapped->prep : "";
            if (chain >= 0 && chain_to_entity.count(chain))
                filler = corpus::Argument::entity_ref(chain_to_entity[chain], prep);
            else if (a.contains("lemma"))
                filler = corpus::Argument::lemma_filler(lowercase(a.at("lemma").get<std::string>()), prep);
            else if (chain >= 0 && chain < static_cast<int>(raw.chains.size()))
                filler = corpus::Argument::lemma_filler(
                    lowercase(raw.chains[static_cast<size_t>(chain)].front().head_lemma), prep);
            else
                throw FormatError("local argument " + role + " has neither lemma nor chain");
            inst.skeleton.arg(mapped->slot) = filler;
            slot_filled[static_cast<size_t>(slot_idx)] = true;
        }

    // Open positions: mapped roles absent from the local syntactic context.
    for (int n = 0; n < 5; ++n) {
        const auto& mapped = mapping.roles[static_cast<size_t>(n)];
        if (!mapped) continue;
        if (slot_filled[static_cast<size_t>(static_cast<int>(mapped->slot))]) continue;
        OpenRole role;
        role.role = "arg" + std::to_string(n);
        role.n = n;
        role.position = *mapped;
        inst.open.push_back(role);
    }

    // Gold filler sets. Roles without mappings are skipped with a warning;
    // spans covered by a chain resolve to that entity, the rest are promoted.
    if (record.contains("gold"))
        for (const nlohmann::json& g : record.at("gold")) {
            const std::string role = g.at("role").get<std::string>();
            const int n = role_number(role);
            if (!mapping.roles[static_cast<size_t>(n)]) {
                inst.warnings.push_back("gold for unmapped role " + role + " skipped");
                continue;
            }
            std::set<int>& ids = inst.gold[role];
            if (g.contains("chains"))
                for (const int chain : g.at("chains")) {
                    if (chain_to_entity.count(chain))
                        ids.insert(chain_to_entity[chain]);
                    else
                        ids.insert(promote_chain(chain));
                }
            if (g.contains("spans"))
                for (const nlohmann::json& sp : g.at("spans")) {
                    GCSpan span{sp.at(0).get<int>(), sp.at(1).get<int>(), sp.at(2).get<int>()};
                    const int covered = covering_entity(span);
                    ids.insert(covered >= 0 ? covered : promote_span(span));
                }
        }

    return inst;
}

inline std::vector<GCInstance> read_gc_instances(const std::string& path,
                                                 const MappingTable& mappings) {
    std::ifstream in = open_input(path);
    std::string line;
    size_t line_no = 0;
    std::vector<GCInstance> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw FormatError("gc file " + path + " line " + std::to_string(line_no) +
                              ": invalid JSON");
        try {
            out.push_back(convert_instance(j, mappings));
        } catch (const FormatError& e) {
            throw FormatError("gc file " + path + " line " + std::to_string(line_no) + ": " +
                              e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fill / no-fill features (the 14 shallow lexical features)

namespace detail {

inline const std::set<std::string>& quantifier_words() {
    static const std::set<std::string> words = {"many", "most", "all",  "some", "few",
                                                "several", "much", "both", "each", "every",
                                                "any", "numerous"};
    return words;
}

inline std::string morph_suffix(const std::string& word) {
    static const std::vector<std::string> suffixes = {
        "ation", "ment", "ance", "ence", "sion", "tion", "ing", "ity",
        "ure",   "age",  "ist",  "ism",  "er",   "or",   "al",  "ss"};
    for (const std::string& s : suffixes)
        if (word.size() > s.size() && word.compare(word.size() - s.size(), s.size(), s) == 0)
            return s;
    return "none";
}

inline bool is_content_pos(const std::string& pos) {
    return !pos.empty() && (pos[0] == 'N' || pos[0] == 'V' || pos[0] == 'J' || pos[0] == 'R');
}

// Past participle governed by a form of "be" inside the same VP chain.
inline bool is_passive_verb(const GCSentence& s, int token) {
    if (token < 0 || token >= static_cast<int>(s.pos.size())) return false;
    if (s.pos[static_cast<size_t>(token)] != "VBN") return false;
    if (s.parse.nodes.empty()) return false;
    const int pt = s.parse.preterminal_of(token);
    if (pt < 0) return false;
    int cur = s.parse.at(pt).parent;
    while (cur >= 0 && starts_with(s.parse.at(cur).label, "VP")) {
        for (int child : s.parse.at(cur).children) {
            const tree::Node& cn = s.parse.at(child);
            if (!cn.is_preterminal()) continue;
            if (starts_with(cn.label, "VB") &&
                lowercase(s.lemmas[static_cast<size_t>(cn.token)]) == "be")
                return true;
        }
        cur = s.parse.at(cur).parent;
    }
    return false;
}

inline std::vector<int> passive_verbs(const GCSentence& s) {
    std::vector<int> out;
    for (int t = 0; t < static_cast<int>(s.tokens.size()); ++t)
        if (is_passive_verb(s, t)) out.push_back(t);
    return out;
}

}  // namespace detail

// The feature names are stable strings; the "&" concatenations follow the
// fill/no-fill feature catalog.
inline std::vector<std::string> extract_fillnofill_features(const GCInstance& inst,
                                                            int role_n) {
    const GCSentence& s = inst.sentences[static_cast<size_t>(inst.pred_sent)];
    if (inst.pred_token < 0 || inst.pred_token >= static_cast<int>(s.tokens.size()))
        throw FormatError("predicate token out of range in " + inst.doc_id);
    if (s.parse.nodes.empty())
        throw FormatError("predicate sentence of " + inst.doc_id + " has no parse tree");

    const std::string& p = inst.nominal;
    const int tok = inst.pred_token;
    std::vector<std::string> feats;

    // 1: the predicate itself; 2: predicate & morphological suffix.
    feats.push_back("p=" + p);
    feats.push_back("p&suffix=" + p + "&" + detail::morph_suffix(p));

    // 3 & 4: predicate / verbal form conjoined with the implicit-role number.
    feats.push_back("p&iarg=" + p + "&" + std::to_string(role_n));
    feats.push_back("verbal&iarg=" + inst.verbal + "&" + std::to_string(role_n));

    // 5: document frequency of the predicate lemma, bucketed.
    {
        int count = 0;
        for (const GCSentence& sent : inst.sentences)
            for (const std::string& lemma : sent.lemmas)
                if (lowercase(lemma) == p) ++count;
        feats.push_back("p&freq=" + p + "&" +
                        (count <= 5 ? std::to_string(count) : std::string("6+")));
    }

    // 6-8: predicate & stemmed content words in 1/2/3-word windows, one
    // feature per (window, stem); an empty window emits an explicit marker so
    // extraction is total.
    for (int w = 1; w <= 3; ++w) {
        const int lo = std::max(0, tok - w);
        const int hi = std::min(static_cast<int>(s.tokens.size()) - 1, tok + w);
        bool any = false;
        for (int t = lo; t <= hi; ++t) {
            if (t == tok || !detail::is_content_pos(s.pos[static_cast<size_t>(t)])) continue;
            feats.push_back("p&win" + std::to_string(w) + "=" + p + "&" +
                            lowercase(s.stems[static_cast<size_t>(t)]));
            any = true;
        }
        if (!any) feats.push_back("p&win" + std::to_string(w) + "=" + p + "&none");
    }

    const std::vector<int> passives = detail::passive_verbs(s);

    // 9: predicate & whether it precedes a passive verb.
    {
        bool before = false;
        for (int t : passives)
            if (t > tok) before = true;
        feats.push_back("p&before_passive=" + p + "&" + (before ? "1" : "0"));
    }

    const int pt = s.parse.preterminal_of(tok);
    if (pt < 0) throw FormatError("predicate token missing from the parse tree in " + inst.doc_id);

    // 10: predicate & head of the following prepositional phrase's object.
    {
        std::string head = "none";
        int best_begin = -1;
        int best_node = -1;
        for (size_t i = 0; i < s.parse.nodes.size(); ++i) {
            const tree::Node& node = s.parse.nodes[i];
            if (!starts_with(node.label, "PP") || node.token_begin <= tok) continue;
            if (best_begin < 0 || node.token_begin < best_begin) {
                best_begin = node.token_begin;
                best_node = static_cast<int>(i);
            }
        }
        if (best_node >= 0) {
            for (int child : s.parse.at(best_node).children)
                if (starts_with(s.parse.at(child).label, "NP")) {
                    const int h = s.parse.head_token(child);
                    if (h >= 0) head = lowercase(s.tokens[static_cast<size_t>(h)]);
                    break;
                }
        }
        feats.push_back("p&pp_obj=" + p + "&" + head);
    }

    // 11: predicate & tree path to the nearest passive verb.
    {
        std::string path = "none";
        int best = -1;
        for (int t : passives)
            if (best < 0 || std::abs(t - tok) < std::abs(best - tok)) best = t;
        if (best >= 0) {
            const int vp = s.parse.preterminal_of(best);
            if (vp >= 0) path = s.parse.path_between(pt, vp);
        }
        feats.push_back("p&passive_path=" + p + "&" + path);
    }

    // 12: predicate & POS of the parent constituent's head word.
    {
        std::string pos = "none";
        const int parent = s.parse.at(pt).parent;
        if (parent >= 0) {
            const int h = s.parse.head_token(parent);
            if (h >= 0) pos = s.pos[static_cast<size_t>(h)];
        }
        feats.push_back("p&parent_head_pos=" + p + "&" + pos);
    }

    // 13: predicate & the last word of its right sibling.
    {
        std::string word = "none";
        const int sib = s.parse.attached_right_sibling(pt);
        if (sib >= 0)
            word = lowercase(s.tokens[static_cast<size_t>(s.parse.at(sib).token_end - 1)]);
        feats.push_back("p&right_sib=" + p + "&" + word);
    }

    // 14: whether the left sibling is a quantifier.
    {
        bool quant = false;
        const int sib = s.parse.attached_left_sibling(pt);
        if (sib >= 0) {
            const std::string word =
                lowercase(s.tokens[static_cast<size_t>(s.parse.at(sib).token_end - 1)]);
            quant = detail::quantifier_words().count(word) > 0;
        }
        feats.push_back("left_quant=" + std::string(quant ? "1" : "0"));
    }

    return feats;
}

// ---------------------------------------------------------------------------
// Fill / no-fill logistic classifier

struct FillNoFillModel {
    std::vector<std::string> feature_names;
    std::unordered_map<std::string, int> index;
    std::vector<double> weights;
    double bias = 0;
    double l2 = 0;

    double probability(const std::vector<std::string>& feats) const {
        double z = bias;
        for (const std::string& f : feats) {
            auto it = index.find(f);
            if (it != index.end()) z += weights[static_cast<size_t>(it->second)];
        }
        return 1.0 / (1.0 + std::exp(-z));
    }
};

struct FnfExample {
    std::vector<std::string> features;
    bool filled = false;
};

inline FillNoFillModel train_fillnofill(const std::vector<FnfExample>& data, double l2,
                                        int epochs, double lr, uint64_t seed) {
    bool saw_pos = false, saw_neg = false;
    for (const FnfExample& ex : data) (ex.filled ? saw_pos : saw_neg) = true;
    if (!saw_pos || !saw_neg)
        throw ContractError("train_fillnofill: training data has a single class");

    FillNoFillModel model;
    model.l2 = l2;
    {
        std::set<std::string> names;
        for (const FnfExample& ex : data)
            names.insert(ex.features.begin(), ex.features.end());
        model.feature_names.assign(names.begin(), names.end());
        for (size_t i = 0; i < model.feature_names.size(); ++i)
            model.index.emplace(model.feature_names[i], static_cast<int>(i));
    }
    model.weights.assign(model.feature_names.size(), 0.0);

    Rng rng(seed);
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t i : order) {
            const FnfExample& ex = data[i];
            const double plabel = model.probability(ex.features);
            const double g = plabel - (ex.filled ? 1.0 : 0.0);
            if (l2 > 0) {
                const double shrink = 1.0 - lr * l2;
                for (double& w : model.weights) w *= shrink;
            }
            for (const std::string& f : ex.features) {
                auto it = model.index.find(f);
                if (it != model.index.end())
                    model.weights[static_cast<size_t>(it->second)] -= lr * g;
            }
            model.bias -= lr * g;
        }
    }
    return model;
}

inline void write_fillnofill(const std::string& path, const FillNoFillModel& model) {
    atomic_write(path, [&](std::ostream& out) {
        out << kFnfHeader << " bias=" << format_double(model.bias) << " l2="
            << format_double(model.l2) << "\n";
        for (size_t i = 0; i < model.feature_names.size(); ++i)
            out << model.feature_names[i] << "\t" << format_double(model.weights[i]) << "\n";
    });
}

inline FillNoFillModel read_fillnofill(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, kFnfHeader))
        throw FormatError("fill/no-fill model " + path + ": missing header");
    FillNoFillModel model;
    for (const std::string& f : split(line, ' ')) {
        if (starts_with(f, "bias=")) model.bias = std::stod(f.substr(5));
        if (starts_with(f, "l2=")) model.l2 = std::stod(f.substr(3));
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, '\t');
        if (parts.size() != 2)
            throw FormatError("fill/no-fill model " + path + ": malformed weight line");
        model.index.emplace(parts[0], static_cast<int>(model.feature_names.size()));
        model.feature_names.push_back(parts[0]);
        model.weights.push_back(std::stod(parts[1]));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Multi implicit-argument prediction

struct RoleDecision {
    std::string role;
    int role_n = 0;
    MappedPosition position;
    bool fill = false;
    int candidate = -1;
    double fnf_probability = 1.0;
    double score = 0;
};

// Per open role: fill/no-fill by the classifier (probability >= 0.5 fills),
// then argmax candidate by narrative coherence of the completed skeleton
// against the document's events. Roles are decided independently unless
// `exclusive` removes chosen candidates from later pools.
inline std::vector<RoleDecision> multi_arg_predict(const GCInstance& inst,
                                                   const eventcomp::EventCompModel& model,
                                                   const FillNoFillModel* fnf,
                                                   inference::Aggregation agg,
                                                   bool exclusive = false) {
    std::vector<RoleDecision> decisions;
    if (inst.open.empty()) return decisions;

    // Context representations, composed once.
    std::vector<std::vector<float>> context_reprs;
    for (const Event& ev : inst.events) {
        const auto ids = cloze::event_token_ids(ev, inst.entities, model.vocab);
        context_reprs.push_back(eventcomp::compose_event(model, ids));
    }

    const std::array<int, 4> skeleton_ids =
        cloze::event_token_ids(inst.skeleton, inst.entities, model.vocab);

    std::set<int> used;
    for (const OpenRole& role : inst.open) {
        RoleDecision d;
        d.role = role.role;
        d.role_n = role.n;
        d.position = role.position;
        d.fnf_probability = fnf ? fnf->probability(extract_fillnofill_features(inst, role.n)) : 1.0;
        if (d.fnf_probability < 0.5) {
            decisions.push_back(d);
            continue;
        }
        if (context_reprs.empty())
            throw ContractError("multi_arg_predict: document has no context events");
        d.fill = true;

        double best = 0;
        int best_id = -1;
        for (const GCCandidate& cand : inst.candidates) {
            if (exclusive && used.count(cand.id)) continue;
            std::array<int, 4> ids = skeleton_ids;
            const std::string token =
                cand.lemma + "-" + corpus::role_suffix(role.position.slot, role.position.prep);
            ids[static_cast<size_t>(static_cast<int>(role.position.slot)) + 1] =
                model.vocab.id(token);
            const std::vector<float> target = eventcomp::compose_event(model, ids);
            const std::vector<float> extra =
                salience::encode_extra_features(role.position.slot, cand.sal,
                                                model.hp.raw_salience)
                    .masked<float>(model.mask);
            double score = 0;
            bool first = true;
            for (const auto& ctx : context_reprs) {
                const double coh =
                    static_cast<double>(eventcomp::coherence(model, ctx, target, extra));
                score = first ? coh
                              : (agg == inference::Aggregation::max ? std::max(score, coh)
                                                                    : score + coh);
                first = false;
            }
            if (best_id < 0 || score > best) {
                best = score;
                best_id = cand.id;
            }
        }
        d.candidate = best_id;
        d.score = best;
        if (best_id >= 0) used.insert(best_id);
        if (best_id < 0) d.fill = false;  // exclusive mode exhausted the pool
        decisions.push_back(d);
    }
    return decisions;
}

// ---------------------------------------------------------------------------
// P/R/F1 scoring: a predicted fill is correct iff the chosen candidate is in
// the role's acceptable gold set; recall counts roles with non-empty gold.

struct PrfResult {
    long long predicted = 0;
    long long correct = 0;
    long long gold_filled = 0;
    bool no_predictions = false;

    double precision() const {
        return predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted;
    }
    double recall() const {
        return gold_filled == 0 ? 0.0 : static_cast<double>(correct) / gold_filled;
    }
    double f1() const {
        const double p = precision(), r = recall();
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
};

struct PrfAccumulator {
    PrfResult overall;
    std::map<std::string, PrfResult> per_predicate;

    void add(const GCInstance& inst, const std::vector<RoleDecision>& decisions) {
        PrfResult& pred_row = per_predicate[inst.nominal];
        for (const OpenRole& role : inst.open) {
            auto g = inst.gold.find(role.role);
            const bool has_gold = g != inst.gold.end() && !g->second.empty();
            if (has_gold) {
                overall.gold_filled += 1;
                pred_row.gold_filled += 1;
            }
        }
        for (const RoleDecision& d : decisions) {
            if (!d.fill) continue;
            overall.predicted += 1;
            pred_row.predicted += 1;
            auto g = inst.gold.find(d.role);
            if (g != inst.gold.end() && g->second.count(d.candidate)) {
                overall.correct += 1;
                pred_row.correct += 1;
            }
        }
    }

    void finalize() {
        overall.no_predictions = overall.predicted == 0;
        for (auto& [k, v] : per_predicate) v.no_predictions = v.predicted == 0;
    }
};

inline void write_gc_report(std::ostream& out, const PrfAccumulator& acc,
                            const std::string& protocol) {
    char buf[64];
    auto row = [&](const std::string& name, const PrfResult& r) {
        std::snprintf(buf, sizeof(buf), "%.1f\t%.1f\t%.1f", r.precision() * 100.0,
                      r.recall() * 100.0, r.f1() * 100.0);
        out << name << "\t" << buf << "\t" << r.correct << "/" << r.predicted << "/"
            << r.gold_filled << (r.no_predictions ? "\tno-predictions" : "") << "\n";
    };
    out << "# fill/no-fill protocol: " << protocol << "\n";
    out << "predicate\tP\tR\tF1\tcorrect/predicted/gold\n";
    for (const auto& [k, v] : acc.per_predicate) row(k, v);
    row("OVERALL", acc.overall);
}

}  // namespace evimp::gc
