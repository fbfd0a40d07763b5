#pragma once

// Document/event/entity data model, ingestion of pre-parsed corpus records,
// verb/argument normalization, and the frequency-thresholded vocabulary.
//
// Corpus file: one JSON object per line (after a "#evimp-corpus v1" header).
// Upstream parsing, coreference and lemmatization are out of scope; records
// arrive with lemmas, chain ids and mention kinds already attached.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>

#include <json.hpp>

#include "evimp/common.hpp"

namespace evimp::corpus {

using json = nlohmann::json;

inline constexpr const char* kCorpusHeader = "#evimp-corpus v1";
inline constexpr const char* kVocabHeader = "#evimp-vocab v1";
inline constexpr const char* kOovToken = "<OOV>";

// ---------------------------------------------------------------------------
// Domain types

enum class MentionKind { named, nominal, pronominal };

inline const char* to_string(MentionKind k) {
    switch (k) {
        case MentionKind::named: return "named";
        case MentionKind::nominal: return "nominal";
        case MentionKind::pronominal: return "pronominal";
    }
    return "nominal";
}

inline MentionKind mention_kind_from(std::string_view s) {
    if (s == "named") return MentionKind::named;
    if (s == "pronominal") return MentionKind::pronominal;
    // Unknown kinds count as nominal.
    return MentionKind::nominal;
}

struct Mention {
    int sentence_index = 0;
    std::string head_lemma;
    MentionKind kind = MentionKind::nominal;
    int token = -1;  // head token index within the sentence, when known

    bool operator==(const Mention&) const = default;
};

// A coreference chain with at least two mentions, sorted by sentence index
// (stable within a sentence by input order).
struct Entity {
    int id = 0;
    std::vector<Mention> mentions;

    bool operator==(const Entity&) const = default;
};

enum class ArgPosition : int { subj = 0, dobj = 1, pobj = 2 };

inline constexpr ArgPosition kAllPositions[] = {ArgPosition::subj, ArgPosition::dobj,
                                                ArgPosition::pobj};

inline const char* to_string(ArgPosition p) {
    switch (p) {
        case ArgPosition::subj: return "subj";
        case ArgPosition::dobj: return "dobj";
        case ArgPosition::pobj: return "pobj";
    }
    return "subj";
}

inline ArgPosition arg_position_from(std::string_view s) {
    if (s == "subj") return ArgPosition::subj;
    if (s == "dobj") return ArgPosition::dobj;
    if (s == "pobj") return ArgPosition::pobj;
    throw FormatError("unknown argument position: " + std::string(s));
}

// Argument filler: an entity reference, a plain head lemma, or empty.
struct Argument {
    int entity = -1;          // >= 0 when the filler is an entity reference
    std::string lemma;        // non-empty when the filler is a plain lemma
    std::string preposition;  // pobj only, present iff the filler is non-empty

    bool is_entity() const { return entity >= 0; }
    bool is_lemma() const { return entity < 0 && !lemma.empty(); }
    bool is_empty() const { return entity < 0 && lemma.empty(); }

    static Argument make_empty() { return {}; }
    static Argument entity_ref(int id, std::string prep = "") {
        Argument a;
        a.entity = id;
        a.preposition = std::move(prep);
        return a;
    }
    static Argument lemma_filler(std::string l, std::string prep = "") {
        Argument a;
        a.lemma = std::move(l);
        a.preposition = std::move(prep);
        return a;
    }

    bool operator==(const Argument&) const = default;
};

// Fixed-arity event: verbal predicate with subject, direct object and at most
// one prepositional object.
struct Event {
    std::string verb;
    Argument subj;
    Argument dobj;
    Argument pobj;

    const Argument& arg(ArgPosition p) const {
        switch (p) {
            case ArgPosition::subj: return subj;
            case ArgPosition::dobj: return dobj;
            case ArgPosition::pobj: return pobj;
        }
        return subj;
    }
    Argument& arg(ArgPosition p) {
        switch (p) {
            case ArgPosition::subj: return subj;
            case ArgPosition::dobj: return dobj;
            case ArgPosition::pobj: return pobj;
        }
        return subj;
    }

    bool operator==(const Event&) const = default;
};

// One document's ordered event list plus its entity list: the universe for
// one cloze/prediction problem.
struct Script {
    std::string doc_id;
    int sentences_count = 0;
    std::vector<Event> events;
    std::vector<Entity> entities;

    bool operator==(const Script&) const = default;
};

// Ingestion-side raw argument: head lemma, optional chain id, optional
// preposition, token distance from the predicate.
struct RawArgument {
    std::string lemma;
    int chain = -1;
    std::string prep;
    int dist = 0;

    bool present() const { return chain >= 0 || !lemma.empty(); }

    bool operator==(const RawArgument&) const = default;
};

struct RawEventRecord {
    std::string verb_lemma;
    bool negated = false;
    std::string particle;
    bool passive = false;
    RawArgument subj;
    RawArgument dobj;
    std::vector<RawArgument> preps;

    bool operator==(const RawEventRecord&) const = default;
};

struct RawDocumentRecord {
    std::string doc_id;
    int sentences_count = 0;
    std::vector<std::vector<Mention>> chains;
    std::vector<RawEventRecord> events;
};

// ---------------------------------------------------------------------------
// Representative lemma of an entity: the most frequent non-pronominal mention
// head lemma, ties broken by earliest mention; if every mention is a pronoun,
// the first mention's lemma.
inline std::string representative_lemma(const Entity& entity) {
    if (entity.mentions.empty()) throw ContractError("entity has no mentions");
    std::map<std::string, std::pair<int, size_t>> tally;  // lemma -> (count, first index)
    for (size_t i = 0; i < entity.mentions.size(); ++i) {
        const Mention& m = entity.mentions[i];
        if (m.kind == MentionKind::pronominal) continue;
        auto [it, inserted] = tally.emplace(lowercase(m.head_lemma), std::make_pair(0, i));
        it->second.first += 1;
        if (inserted) it->second.second = i;
    }
    if (tally.empty()) return lowercase(entity.mentions.front().head_lemma);
    const std::pair<const std::string, std::pair<int, size_t>>* best = nullptr;
    for (const auto& kv : tally) {
        if (!best || kv.second.first > best->second.first ||
            (kv.second.first == best->second.first && kv.second.second < best->second.second))
            best = &kv;
    }
    return best->first;
}

// ---------------------------------------------------------------------------
// Role-lemma token construction: "<lemma>-<role>" with role one of subj, dobj,
// prep_<preposition>.
inline std::string role_suffix(ArgPosition position, const std::string& preposition) {
    switch (position) {
        case ArgPosition::subj: return "subj";
        case ArgPosition::dobj: return "dobj";
        case ArgPosition::pobj:
            return preposition.empty() ? "prep" : "prep_" + preposition;
    }
    return "subj";
}

inline std::string argument_token(const Argument& arg, ArgPosition position,
                                  const std::vector<Entity>& entities) {
    if (arg.is_empty()) throw ContractError("argument_token called on an empty filler");
    std::string lemma;
    if (arg.is_entity()) {
        if (arg.entity >= static_cast<int>(entities.size()))
            throw ReferenceError("argument references entity " + std::to_string(arg.entity) +
                                 " outside the script");
        lemma = representative_lemma(entities[arg.entity]);
    } else {
        lemma = lowercase(arg.lemma);
    }
    return lemma + "-" + role_suffix(position, arg.preposition);
}

inline std::string verb_token(const Event& event) { return event.verb + "-pred"; }

// Tokens of one event in slot order: predicate, then non-empty arguments.
inline std::vector<std::string> event_tokens(const Event& event,
                                             const std::vector<Entity>& entities) {
    std::vector<std::string> tokens;
    tokens.push_back(verb_token(event));
    for (ArgPosition p : kAllPositions) {
        const Argument& a = event.arg(p);
        if (!a.is_empty()) tokens.push_back(argument_token(a, p, entities));
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Event normalization: lowercase lemma, negation prefix, particle suffix,
// passive rewrite, closest-preposition selection. The passive/negation flags
// are consumed here; a normalized Event carries no flags and is never
// re-normalized.
inline Event normalize_event(const RawEventRecord& raw,
                             const std::unordered_map<int, int>& chain_to_entity) {
    if (raw.verb_lemma.empty()) throw ContractError("raw event has an empty verb lemma");

    auto resolve = [&](const RawArgument& a, ArgPosition pos, const std::string& prep) {
        if (!a.present()) return Argument::make_empty();
        if (a.dist < 0) throw FormatError("negative token distance in event argument");
        const std::string p = pos == ArgPosition::pobj ? lowercase(prep) : std::string();
        if (a.chain >= 0) {
            auto it = chain_to_entity.find(a.chain);
            if (it != chain_to_entity.end()) return Argument::entity_ref(it->second, p);
            // Chains below the promotion length fall back to their head lemma.
        }
        if (a.lemma.empty()) return Argument::make_empty();
        return Argument::lemma_filler(lowercase(a.lemma), p);
    };

    Event event;
    std::string verb = lowercase(raw.verb_lemma);
    if (!raw.particle.empty()) verb += "_" + lowercase(raw.particle);
    if (raw.negated) verb = "not_" + verb;
    event.verb = verb;

    RawArgument subj = raw.subj;
    RawArgument dobj = raw.dobj;
    std::vector<RawArgument> preps = raw.preps;

    if (raw.passive) {
        // Passive subject becomes the direct object; the "by"-object becomes
        // the subject. Slots already occupied are left alone.
        if (!dobj.present() && subj.present()) {
            dobj = subj;
            subj = RawArgument{};
        }
        if (!subj.present()) {
            int by_idx = -1;
            for (size_t i = 0; i < preps.size(); ++i) {
                if (lowercase(preps[i].prep) != "by" || !preps[i].present()) continue;
                if (by_idx < 0 || preps[i].dist < preps[by_idx].dist) by_idx = static_cast<int>(i);
            }
            if (by_idx >= 0) {
                subj = preps[by_idx];
                preps.erase(preps.begin() + by_idx);
            }
        }
    }

    event.subj = resolve(subj, ArgPosition::subj, "");
    event.dobj = resolve(dobj, ArgPosition::dobj, "");

    // Among multiple prepositional candidates keep the one closest to the
    // predicate (ties by input order).
    int best = -1;
    for (size_t i = 0; i < preps.size(); ++i) {
        if (!preps[i].present()) continue;
        if (best < 0 || preps[i].dist < preps[best].dist) best = static_cast<int>(i);
    }
    if (best >= 0) event.pobj = resolve(preps[best], ArgPosition::pobj, preps[best].prep);

    return event;
}

// ---------------------------------------------------------------------------
// Document assembly: chains of length >= 2 are promoted to entities (dense,
// 0-based ids in input order); shorter chains demote their arguments to lemma
// fillers.
inline Script parse_document(const RawDocumentRecord& record) {
    Script script;
    script.doc_id = record.doc_id;
    script.sentences_count = record.sentences_count;

    std::unordered_map<int, int> chain_to_entity;
    for (size_t c = 0; c < record.chains.size(); ++c) {
        const auto& chain = record.chains[c];
        for (const Mention& m : chain) {
            if (m.sentence_index < 0)
                throw FormatError("doc " + record.doc_id + ": mention with negative sentence index");
            if (m.head_lemma.empty())
                throw FormatError("doc " + record.doc_id + ": mention with empty head lemma");
        }
        if (chain.size() < 2) continue;
        Entity entity;
        entity.id = static_cast<int>(script.entities.size());
        entity.mentions = chain;
        std::stable_sort(entity.mentions.begin(), entity.mentions.end(),
                         [](const Mention& a, const Mention& b) {
                             return a.sentence_index < b.sentence_index;
                         });
        chain_to_entity.emplace(static_cast<int>(c), entity.id);
        script.entities.push_back(std::move(entity));
    }

    auto check_chain = [&](const RawArgument& a, const char* field, size_t event_idx) {
        if (a.chain >= static_cast<int>(record.chains.size()))
            throw ReferenceError("doc " + record.doc_id + ": event " + std::to_string(event_idx) +
                                 " " + field + " references unknown chain " +
                                 std::to_string(a.chain));
    };

    for (size_t i = 0; i < record.events.size(); ++i) {
        const RawEventRecord& raw = record.events[i];
        if (raw.verb_lemma.empty())
            throw FormatError("doc " + record.doc_id + ": event " + std::to_string(i) +
                              " has an empty verb lemma");
        check_chain(raw.subj, "subj", i);
        check_chain(raw.dobj, "dobj", i);
        for (const RawArgument& p : raw.preps) check_chain(p, "pobj", i);
        script.events.push_back(normalize_event(raw, chain_to_entity));
    }
    return script;
}

// Script-level invariant check: every entity reference resolves.
inline void validate(const Script& script) {
    for (size_t i = 0; i < script.events.size(); ++i) {
        for (ArgPosition p : kAllPositions) {
            const Argument& a = script.events[i].arg(p);
            if (a.is_entity() && a.entity >= static_cast<int>(script.entities.size()))
                throw ReferenceError("doc " + script.doc_id + ": event " + std::to_string(i) +
                                     " references entity " + std::to_string(a.entity) +
                                     " outside the script");
        }
    }
    for (const Entity& e : script.entities)
        if (e.mentions.size() < 2)
            throw FormatError("doc " + script.doc_id + ": entity " + std::to_string(e.id) +
                              " has a chain of length " + std::to_string(e.mentions.size()));
}

// ---------------------------------------------------------------------------
// JSON (de)serialization

namespace detail {

inline json mention_to_json(const Mention& m) {
    json j{{"sent", m.sentence_index}, {"head_lemma", m.head_lemma}, {"kind", to_string(m.kind)}};
    if (m.token >= 0) j["token"] = m.token;
    return j;
}

inline Mention mention_from_json(const json& j) {
    Mention m;
    m.sentence_index = j.at("sent").get<int>();
    m.head_lemma = j.at("head_lemma").get<std::string>();
    m.kind = mention_kind_from(j.at("kind").get<std::string>());
    m.token = j.value("token", -1);
    return m;
}

inline json raw_arg_to_json(const RawArgument& a) {
    json j = json::object();
    if (!a.lemma.empty()) j["lemma"] = a.lemma;
    if (a.chain >= 0) j["chain"] = a.chain;
    if (!a.prep.empty()) j["prep"] = a.prep;
    if (a.dist != 0) j["dist"] = a.dist;
    return j;
}

inline RawArgument raw_arg_from_json(const json& j) {
    RawArgument a;
    if (j.contains("lemma")) a.lemma = j.at("lemma").get<std::string>();
    if (j.contains("chain")) a.chain = j.at("chain").get<int>();
    if (j.contains("prep")) a.prep = j.at("prep").get<std::string>();
    if (j.contains("dist")) a.dist = j.at("dist").get<int>();
    return a;
}

}  // namespace detail

inline json raw_event_to_json(const RawEventRecord& e) {
    json j = json::object();
    j["verb"] = e.verb_lemma;
    if (e.negated) j["negated"] = true;
    if (!e.particle.empty()) j["particle"] = e.particle;
    if (e.passive) j["passive"] = true;
    if (e.subj.present()) j["subj"] = detail::raw_arg_to_json(e.subj);
    if (e.dobj.present()) j["dobj"] = detail::raw_arg_to_json(e.dobj);
    if (!e.preps.empty()) {
        json arr = json::array();
        for (const RawArgument& p : e.preps) arr.push_back(detail::raw_arg_to_json(p));
        j["preps"] = arr;
    }
    return j;
}

inline RawEventRecord raw_event_from_json(const json& j) {
    RawEventRecord e;
    e.verb_lemma = j.at("verb").get<std::string>();
    e.negated = j.value("negated", false);
    e.particle = j.value("particle", std::string());
    e.passive = j.value("passive", false);
    if (j.contains("subj")) e.subj = detail::raw_arg_from_json(j.at("subj"));
    if (j.contains("dobj")) e.dobj = detail::raw_arg_from_json(j.at("dobj"));
    if (j.contains("preps"))
        for (const json& p : j.at("preps")) e.preps.push_back(detail::raw_arg_from_json(p));
    return e;
}

inline RawDocumentRecord raw_document_from_json(const json& j) {
    RawDocumentRecord r;
    r.doc_id = j.at("doc_id").get<std::string>();
    r.sentences_count = j.value("sentences_count", 0);
    if (j.contains("entities"))
        for (const json& chain : j.at("entities")) {
            std::vector<Mention> mentions;
            for (const json& m : chain) mentions.push_back(detail::mention_from_json(m));
            r.chains.push_back(std::move(mentions));
        }
    if (j.contains("events"))
        for (const json& e : j.at("events")) r.events.push_back(raw_event_from_json(e));
    return r;
}

// Parse one corpus line. Errors name the line and offending field.
inline Script parse_document_line(const std::string& line, size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError("corpus line " + std::to_string(line_no) + ": invalid JSON: " +
                          e.what());
    }
    try {
        return parse_document(raw_document_from_json(j));
    } catch (const json::exception& e) {
        throw FormatError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ReferenceError& e) {
        throw ReferenceError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
}

// Serialize a (normalized) Script back to the corpus record form. Flags are
// already consumed, so the emitted record re-parses to an identical Script.
inline json script_to_json(const Script& script) {
    json j;
    j["doc_id"] = script.doc_id;
    j["sentences_count"] = script.sentences_count;
    json chains = json::array();
    for (const Entity& e : script.entities) {
        json chain = json::array();
        for (const Mention& m : e.mentions) chain.push_back(detail::mention_to_json(m));
        chains.push_back(chain);
    }
    j["entities"] = chains;
    json events = json::array();
    for (const Event& ev : script.events) {
        RawEventRecord raw;
        raw.verb_lemma = ev.verb;
        auto to_raw = [](const Argument& a) {
            RawArgument r;
            if (a.is_entity())
                r.chain = a.entity;
            else if (a.is_lemma())
                r.lemma = a.lemma;
            r.prep = a.preposition;
            return r;
        };
        raw.subj = to_raw(ev.subj);
        raw.dobj = to_raw(ev.dobj);
        if (!ev.pobj.is_empty()) raw.preps.push_back(to_raw(ev.pobj));
        events.push_back(raw_event_to_json(raw));
    }
    j["events"] = events;
    return j;
}

inline std::string serialize_script(const Script& script) { return script_to_json(script).dump(); }

// ---------------------------------------------------------------------------
// Corpus file access

template <class Fn>
void for_each_script(const std::string& path, Fn&& fn) {
    std::ifstream in = open_input(path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        fn(parse_document_line(line, line_no));
    }
}

inline std::vector<Script> read_corpus(const std::string& path) {
    std::vector<Script> scripts;
    for_each_script(path, [&](Script s) { scripts.push_back(std::move(s)); });
    return scripts;
}

inline void write_corpus(const std::string& path, const std::vector<Script>& scripts) {
    atomic_write(path, [&](std::ostream& out) {
        out << kCorpusHeader << "\n";
        for (const Script& s : scripts) out << serialize_script(s) << "\n";
    });
}

// ---------------------------------------------------------------------------
// Vocabulary: retained role-lemma tokens with dense 0-based ids; id 0 is the
// reserved OOV sentinel whose count aggregates everything that fell below the
// thresholds.

struct Vocabulary {
    std::vector<std::string> tokens;  // id -> token
    std::vector<long long> counts;    // id -> count
    std::unordered_map<std::string, int> token_to_id;
    int oov_id = 0;
    std::vector<std::string> prepositions;  // retained, by descending count

    size_t size() const { return tokens.size(); }

    int id(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? oov_id : it->second;
    }

    long long count_of(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? 0 : counts[it->second];
    }

    long long total_count() const {
        long long total = 0;
        for (long long c : counts) total += c;
        return total;
    }

    bool prep_retained(const std::string& prep) const {
        return std::find(prepositions.begin(), prepositions.end(), prep) != prepositions.end();
    }

    uint64_t content_hash() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (size_t i = 0; i < tokens.size(); ++i) {
            h = fnv1a64(tokens[i], h);
            h = fnv1a64("\t" + std::to_string(counts[i]) + "\n", h);
        }
        for (const std::string& p : prepositions) h = fnv1a64(p + ",", h);
        return h;
    }
};

// Count tables accumulated over a stream of scripts; mergeable across workers.
struct VocabCounts {
    std::unordered_map<std::string, long long> tokens;
    std::unordered_map<std::string, long long> preps;

    void add(const Script& script) {
        for (const Event& ev : script.events) {
            tokens[verb_token(ev)] += 1;
            for (ArgPosition p : kAllPositions) {
                const Argument& a = ev.arg(p);
                if (a.is_empty()) continue;
                tokens[argument_token(a, p, script.entities)] += 1;
                if (p == ArgPosition::pobj && !a.preposition.empty())
                    preps[a.preposition] += 1;
            }
        }
    }

    void merge(const VocabCounts& other) {
        for (const auto& [k, v] : other.tokens) tokens[k] += v;
        for (const auto& [k, v] : other.preps) preps[k] += v;
    }
};

// Retention: predicate/argument tokens with count strictly above the
// threshold, prepositional tokens additionally gated on their preposition
// being among the top-K. Ids: OOV = 0, then descending count, ties broken
// lexicographically.
inline Vocabulary build_vocabulary_from_counts(const VocabCounts& counts,
                                               long long verb_arg_threshold,
                                               size_t prep_top_k) {
    if (verb_arg_threshold < 0) throw ContractError("verb_arg_threshold must be >= 0");
    Vocabulary vocab;

    std::vector<std::pair<std::string, long long>> prep_list(counts.preps.begin(),
                                                             counts.preps.end());
    std::sort(prep_list.begin(), prep_list.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (prep_list.size() > prep_top_k) prep_list.resize(prep_top_k);
    for (const auto& [p, c] : prep_list) vocab.prepositions.push_back(p);

    auto prep_of_token = [](const std::string& token) -> std::optional<std::string> {
        const size_t pos = token.rfind("-prep_");
        if (pos == std::string::npos) return std::nullopt;
        return token.substr(pos + 6);
    };

    std::vector<std::pair<std::string, long long>> retained;
    long long oov_count = 0;
    for (const auto& [token, count] : counts.tokens) {
        bool keep = count > verb_arg_threshold;
        if (keep) {
            if (auto prep = prep_of_token(token); prep && !vocab.prep_retained(*prep))
                keep = false;
        }
        if (keep)
            retained.emplace_back(token, count);
        else
            oov_count += count;
    }
    std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    vocab.oov_id = 0;
    vocab.tokens.push_back(kOovToken);
    vocab.counts.push_back(oov_count);
    for (auto& [token, count] : retained) {
        vocab.token_to_id.emplace(token, static_cast<int>(vocab.tokens.size()));
        vocab.tokens.push_back(std::move(token));
        vocab.counts.push_back(count);
    }
    vocab.token_to_id.emplace(kOovToken, 0);
    return vocab;
}

template <class ScriptRange>
Vocabulary build_vocabulary(const ScriptRange& scripts, long long verb_arg_threshold,
                            size_t prep_top_k) {
    VocabCounts counts;
    for (const Script& s : scripts) counts.add(s);
    return build_vocabulary_from_counts(counts, verb_arg_threshold, prep_top_k);
}

// Keep-probability for frequent-verb downsampling when emitting embedding
// sentences and training triples.
inline double downsample_keep_probability(long long verb_count, long long threshold) {
    if (threshold <= 0) throw ContractError("downsample threshold must be > 0");
    if (verb_count < 0) throw ContractError("verb count must be >= 0");
    if (verb_count <= threshold) return 1.0;
    return static_cast<double>(threshold) / static_cast<double>(verb_count);
}

// ---------------------------------------------------------------------------
// Vocabulary file: header line with the OOV sentinel, then token<TAB>count<TAB>id.

inline void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
    atomic_write(path, [&](std::ostream& out) {
        out << kVocabHeader << " oov=" << kOovToken << " oov_id=" << vocab.oov_id
            << " oov_count=" << vocab.counts[vocab.oov_id] << " preps=";
        for (size_t i = 0; i < vocab.prepositions.size(); ++i) {
            if (i) out << ",";
            out << vocab.prepositions[i];
        }
        out << "\n";
        for (size_t i = 1; i < vocab.tokens.size(); ++i)
            out << vocab.tokens[i] << "\t" << vocab.counts[i] << "\t" << i << "\n";
    });
}

inline Vocabulary read_vocabulary(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string header;
    if (!std::getline(in, header) || !starts_with(header, kVocabHeader))
        throw FormatError("vocabulary file " + path + ": missing header");

    Vocabulary vocab;
    vocab.oov_id = 0;
    vocab.tokens.push_back(kOovToken);
    vocab.counts.push_back(0);
    vocab.token_to_id.emplace(kOovToken, 0);

    for (const std::string& field : split(header, ' ')) {
        if (starts_with(field, "oov_count="))
            vocab.counts[0] = std::stoll(field.substr(10));
        else if (starts_with(field, "preps=") && field.size() > 6)
            vocab.prepositions = split(field.substr(6), ',');
    }

    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto parts = split(line, '\t');
        if (parts.size() != 3)
            throw FormatError("vocabulary file " + path + " line " + std::to_string(line_no) +
                              ": expected token<TAB>count<TAB>id");
        const int id = std::stoi(parts[2]);
        if (id != static_cast<int>(vocab.tokens.size()))
            throw FormatError("vocabulary file " + path + " line " + std::to_string(line_no) +
                              ": ids must be dense and ordered");
        vocab.token_to_id.emplace(parts[0], id);
        vocab.tokens.push_back(parts[0]);
        vocab.counts.push_back(std::stoll(parts[1]));
    }
    return vocab;
}

}  // namespace evimp::corpus
