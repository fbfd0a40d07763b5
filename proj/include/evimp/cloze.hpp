#pragma once

// Argument-cloze instance generation and (context, positive, negative)
// training triples, including the multi-argument `move` negatives.
//
// All generators are pure functions of (script, rng); document-level
// parallelism derives one seed per document so output is order-independent.

#include "evimp/corpus.hpp"
#include "evimp/salience.hpp"

namespace evimp::cloze {

using corpus::ArgPosition;
using corpus::Argument;
using corpus::Event;
using corpus::Script;
using corpus::Vocabulary;

inline constexpr const char* kClozeHeader = "#evimp-cloze v1";
inline constexpr const char* kTriplesHeader = "#evimp-triples v1";

struct ClozeInstance {
    std::string doc_id;
    int target_event = 0;
    ArgPosition position = ArgPosition::subj;
    std::string preposition;  // recorded for pobj so candidates can re-complete the slot
    int gold_entity = 0;
    std::vector<int> candidates;  // all entity ids of the script, in id order
};

enum class NegKind { replace, move };

inline const char* to_string(NegKind k) { return k == NegKind::replace ? "replace" : "move"; }

struct TrainingTriple {
    Event context;
    Event positive;
    Event negative;
    ArgPosition position = ArgPosition::subj;      // perturbed slot in the positive event
    ArgPosition neg_position = ArgPosition::subj;  // slot judged on the negative side
    int pos_entity = 0;
    int neg_entity = 0;  // == pos_entity for move negatives
    NegKind kind = NegKind::replace;
    int context_index = 0;
    int positive_index = 0;
};

// ---------------------------------------------------------------------------
// Eq.-1 style completion: put an entity into an argument position, leaving the
// other slots unchanged. For pobj the existing preposition is retained; when
// filling an emptied slot the caller supplies the instance's recorded one.
inline Event replace_argument(const Event& event, ArgPosition position, int entity_id,
                              const std::string& preposition = "") {
    Event out = event;
    Argument& slot = out.arg(position);
    std::string prep;
    if (position == ArgPosition::pobj)
        prep = !slot.preposition.empty() ? slot.preposition : preposition;
    slot = Argument::entity_ref(entity_id, prep);
    return out;
}

// ---------------------------------------------------------------------------
// Cloze-instance generation: every (event, position) slot filled by an entity
// that still occurs somewhere else in the script is a candidate slot; up to
// per_doc_cap of them are sampled uniformly.
inline std::vector<ClozeInstance> generate_cloze_instances(const Script& script, Rng& rng,
                                                           size_t per_doc_cap = 0) {
    std::vector<ClozeInstance> instances;
    if (script.events.size() < 2 || script.entities.size() < 2) return instances;

    // Argument-slot occurrences per entity, for the "appears elsewhere" rule.
    std::vector<int> arg_occurrences(script.entities.size(), 0);
    for (const Event& ev : script.events)
        for (ArgPosition p : corpus::kAllPositions)
            if (ev.arg(p).is_entity()) arg_occurrences[ev.arg(p).entity] += 1;

    std::vector<ClozeInstance> slots;
    for (size_t t = 0; t < script.events.size(); ++t) {
        for (ArgPosition p : corpus::kAllPositions) {
            const Argument& a = script.events[t].arg(p);
            if (!a.is_entity()) continue;
            const int x = a.entity;
            const bool appears_elsewhere =
                arg_occurrences[x] >= 2 || script.entities[x].mentions.size() >= 2;
            if (!appears_elsewhere) continue;
            ClozeInstance inst;
            inst.doc_id = script.doc_id;
            inst.target_event = static_cast<int>(t);
            inst.position = p;
            inst.preposition = a.preposition;
            inst.gold_entity = x;
            inst.candidates.resize(script.entities.size());
            for (size_t i = 0; i < script.entities.size(); ++i)
                inst.candidates[i] = static_cast<int>(i);
            slots.push_back(std::move(inst));
        }
    }

    if (per_doc_cap > 0 && slots.size() > per_doc_cap) {
        for (size_t i : rng.sample_indices(slots.size(), per_doc_cap))
            instances.push_back(std::move(slots[i]));
    } else {
        instances = std::move(slots);
    }
    return instances;
}

// ---------------------------------------------------------------------------
// Training-triple generation. One `replace` negative per (context, positive)
// pair by default; with multi_arg an additional `move` negative relocates the
// perturbed argument within the positive event.

struct TripleGenConfig {
    bool multi_arg = false;
    int negatives_per_pair = 1;
    long long downsample_threshold = 100000;
    size_t per_doc_cap = 0;  // 0 = unlimited
};

namespace detail {

inline std::vector<ArgPosition> entity_positions(const Event& ev) {
    std::vector<ArgPosition> out;
    for (ArgPosition p : corpus::kAllPositions)
        if (ev.arg(p).is_entity()) out.push_back(p);
    return out;
}

}  // namespace detail

inline std::vector<TrainingTriple> generate_triples(const Script& script, Rng& rng,
                                                    const TripleGenConfig& cfg,
                                                    const Vocabulary* verb_counts = nullptr) {
    std::vector<TrainingTriple> triples;
    const size_t n_events = script.events.size();
    const size_t n_entities = script.entities.size();
    if (n_events < 2 || n_entities < 2) return triples;

    for (size_t p_idx = 0; p_idx < n_events; ++p_idx) {
        const Event& positive = script.events[p_idx];
        const auto positions = detail::entity_positions(positive);
        if (positions.empty()) continue;

        if (verb_counts) {
            const double keep = corpus::downsample_keep_probability(
                verb_counts->count_of(corpus::verb_token(positive)), cfg.downsample_threshold);
            if (keep < 1.0 && !rng.bernoulli(keep)) continue;
        }

        // Context event: uniform among the other events.
        size_t c_idx = rng.index(n_events - 1);
        if (c_idx >= p_idx) ++c_idx;

        const ArgPosition position = positions[rng.index(positions.size())];
        const int pos_entity = positive.arg(position).entity;

        for (int k = 0; k < cfg.negatives_per_pair; ++k) {
            // Replacement entity: uniform among the script's other entities.
            size_t pick = rng.index(n_entities - 1);
            if (static_cast<int>(pick) >= pos_entity) ++pick;
            const int neg_entity = static_cast<int>(pick);

            TrainingTriple t;
            t.context = script.events[c_idx];
            t.positive = positive;
            t.negative = replace_argument(positive, position, neg_entity);
            t.position = position;
            t.neg_position = position;
            t.pos_entity = pos_entity;
            t.neg_entity = neg_entity;
            t.kind = NegKind::replace;
            t.context_index = static_cast<int>(c_idx);
            t.positive_index = static_cast<int>(p_idx);
            triples.push_back(std::move(t));
        }

        if (cfg.multi_arg) {
            // Destinations: the other slots; pobj only when already occupied
            // (its preposition is reused); never a no-op relocation.
            std::vector<ArgPosition> dests;
            for (ArgPosition d : corpus::kAllPositions) {
                if (d == position) continue;
                if (d == ArgPosition::pobj && positive.pobj.is_empty()) continue;
                Event moved = positive;
                moved.arg(d) = positive.arg(position);
                if (d == ArgPosition::pobj)
                    moved.arg(d).preposition = positive.pobj.preposition;
                else
                    moved.arg(d).preposition.clear();
                moved.arg(position) = Argument::make_empty();
                if (moved == positive) continue;
                dests.push_back(d);
            }
            if (!dests.empty()) {
                const ArgPosition dest = dests[rng.index(dests.size())];
                Event negative = positive;
                negative.arg(dest) = positive.arg(position);
                if (dest == ArgPosition::pobj)
                    negative.arg(dest).preposition = positive.pobj.preposition;
                else
                    negative.arg(dest).preposition.clear();
                negative.arg(position) = Argument::make_empty();

                TrainingTriple t;
                t.context = script.events[c_idx];
                t.positive = positive;
                t.negative = std::move(negative);
                t.position = position;
                t.neg_position = dest;
                t.pos_entity = pos_entity;
                t.neg_entity = pos_entity;
                t.kind = NegKind::move;
                t.context_index = static_cast<int>(c_idx);
                t.positive_index = static_cast<int>(p_idx);
                triples.push_back(std::move(t));
            }
        }
    }

    if (cfg.per_doc_cap > 0 && triples.size() > cfg.per_doc_cap) {
        std::vector<TrainingTriple> capped;
        capped.reserve(cfg.per_doc_cap);
        for (size_t i : rng.sample_indices(triples.size(), cfg.per_doc_cap))
            capped.push_back(std::move(triples[i]));
        triples = std::move(capped);
    }
    return triples;
}

// ---------------------------------------------------------------------------
// Encoded triple records: token ids plus the salience features of the two
// judged entities, precomputed so training needs no Script access.

struct TripleRecord {
    std::array<int, 4> context{};   // verb, subj, dobj, pobj token ids; -1 = empty slot
    std::array<int, 4> positive{};
    std::array<int, 4> negative{};
    int position = 0;
    int neg_position = 0;
    int pos_entity = 0;
    int neg_entity = 0;
    NegKind kind = NegKind::replace;
    salience::SalienceFeatures pos_sal;
    salience::SalienceFeatures neg_sal;
};

inline std::array<int, 4> event_token_ids(const Event& ev,
                                          const std::vector<corpus::Entity>& entities,
                                          const Vocabulary& vocab) {
    std::array<int, 4> ids{vocab.id(corpus::verb_token(ev)), -1, -1, -1};
    for (ArgPosition p : corpus::kAllPositions) {
        const Argument& a = ev.arg(p);
        if (!a.is_empty())
            ids[static_cast<int>(p) + 1] = vocab.id(corpus::argument_token(a, p, entities));
    }
    return ids;
}

inline TripleRecord encode_triple(const Script& script, const TrainingTriple& t,
                                  const Vocabulary& vocab) {
    TripleRecord r;
    r.context = event_token_ids(t.context, script.entities, vocab);
    r.positive = event_token_ids(t.positive, script.entities, vocab);
    r.negative = event_token_ids(t.negative, script.entities, vocab);
    r.position = static_cast<int>(t.position);
    r.neg_position = static_cast<int>(t.neg_position);
    r.pos_entity = t.pos_entity;
    r.neg_entity = t.neg_entity;
    r.kind = t.kind;
    r.pos_sal = salience::extract_salience(script.entities[t.pos_entity]);
    r.neg_sal = salience::extract_salience(script.entities[t.neg_entity]);
    return r;
}

// ---------------------------------------------------------------------------
// File formats

inline void write_cloze_instances(const std::string& path,
                                  const std::vector<ClozeInstance>& instances) {
    atomic_write(path, [&](std::ostream& out) {
        out << kClozeHeader << "\n";
        for (const ClozeInstance& c : instances) {
            out << c.doc_id << "\t" << c.target_event << "\t" << to_string(c.position) << "\t"
                << (c.preposition.empty() ? "-" : c.preposition) << "\t" << c.gold_entity << "\t";
            for (size_t i = 0; i < c.candidates.size(); ++i) {
                if (i) out << ",";
                out << c.candidates[i];
            }
            out << "\n";
        }
    });
}

inline std::vector<ClozeInstance> read_cloze_instances(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, kClozeHeader))
        throw FormatError("cloze file " + path + ": missing header");
    std::vector<ClozeInstance> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 6)
            throw FormatError("cloze file " + path + " line " + std::to_string(line_no) +
                              ": expected 6 fields");
        ClozeInstance c;
        c.doc_id = f[0];
        c.target_event = std::stoi(f[1]);
        c.position = corpus::arg_position_from(f[2]);
        if (f[3] != "-") c.preposition = f[3];
        c.gold_entity = std::stoi(f[4]);
        for (const std::string& s : split(f[5], ','))
            if (!s.empty()) c.candidates.push_back(std::stoi(s));
        out.push_back(std::move(c));
    }
    return out;
}

namespace detail {

inline void write_sal(std::ostream& out, const salience::SalienceFeatures& s) {
    out << s.first_loc << " " << s.head_count << " " << s.named << " " << s.nominal << " "
        << s.pronominal << " " << s.total;
}

}  // namespace detail

inline void write_triple_records(const std::string& path,
                                 const std::vector<TripleRecord>& records) {
    atomic_write(path, [&](std::ostream& out) {
        out << kTriplesHeader << "\n";
        for (const TripleRecord& r : records) {
            for (int v : r.context) out << v << " ";
            for (int v : r.positive) out << v << " ";
            for (int v : r.negative) out << v << " ";
            out << r.position << " " << r.neg_position << " " << r.pos_entity << " "
                << r.neg_entity << " " << (r.kind == NegKind::replace ? "r" : "m") << " ";
            detail::write_sal(out, r.pos_sal);
            out << " ";
            detail::write_sal(out, r.neg_sal);
            out << "\n";
        }
    });
}

inline std::vector<TripleRecord> read_triple_records(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, kTriplesHeader))
        throw FormatError("triples file " + path + ": missing header");
    std::vector<TripleRecord> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        TripleRecord r;
        std::string kind;
        auto rd_sal = [&](salience::SalienceFeatures& s) {
            ss >> s.first_loc >> s.head_count >> s.named >> s.nominal >> s.pronominal >> s.total;
        };
        for (int& v : r.context) ss >> v;
        for (int& v : r.positive) ss >> v;
        for (int& v : r.negative) ss >> v;
        ss >> r.position >> r.neg_position >> r.pos_entity >> r.neg_entity >> kind;
        rd_sal(r.pos_sal);
        rd_sal(r.neg_sal);
        if (!ss)
            throw FormatError("triples file " + path + " line " + std::to_string(line_no) +
                              ": truncated record");
        r.kind = kind == "m" ? NegKind::move : NegKind::replace;
        out.push_back(r);
    }
    return out;
}

}  // namespace evimp::cloze
