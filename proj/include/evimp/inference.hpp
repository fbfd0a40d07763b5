#pragma once

// Candidate scoring and selection: complete the target event with each
// candidate entity, score it against every context event, aggregate by max
// (or sum), pick the argmax. Plus the Random, MostFreq and EventWord2vec
// baselines. Ties everywhere break toward the lower entity id.

#include "evimp/cloze.hpp"
#include "evimp/embeddings.hpp"
#include "evimp/eventcomp.hpp"

namespace evimp::inference {

using cloze::ClozeInstance;
using corpus::Script;

enum class Aggregation { max, sum };

inline Aggregation aggregation_from(std::string_view s) {
    if (s == "max") return Aggregation::max;
    if (s == "sum") return Aggregation::sum;
    throw FormatError("unknown aggregation: " + std::string(s));
}

struct Prediction {
    std::string doc_id;
    int target_event = 0;
    corpus::ArgPosition position = corpus::ArgPosition::subj;
    int gold = 0;
    int chosen = 0;
    bool correct = false;
    std::vector<std::pair<int, double>> ranked;  // (entity id, score), best first
};

namespace detail {

inline void rank_and_choose(Prediction& p, std::vector<std::pair<int, double>> scores) {
    if (scores.empty()) throw ContractError("predict: empty candidate list");
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    p.ranked = std::move(scores);
    p.chosen = p.ranked.front().first;
    p.correct = p.chosen == p.gold;
}

inline Prediction prediction_shell(const ClozeInstance& inst) {
    Prediction p;
    p.doc_id = inst.doc_id;
    p.target_event = inst.target_event;
    p.position = inst.position;
    p.gold = inst.gold_entity;
    return p;
}

inline double aggregate(double acc, double value, Aggregation agg, bool first) {
    if (first) return value;
    return agg == Aggregation::max ? std::max(acc, value) : acc + value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EventComp scoring. Context representations are composed once per instance
// and shared across candidates; the arithmetic is identical to scoring each
// (candidate, context) pair separately.

struct ScoringContext {
    std::vector<std::vector<float>> context_reprs;  // composed, excluding the target
    std::vector<size_t> context_indices;
};

inline ScoringContext prepare_contexts(const Script& script, int target_event,
                                       const eventcomp::EventCompModel& model) {
    if (script.events.size() < 2)
        throw ContractError("score_candidate: single-event script has no context");
    ScoringContext ctx;
    for (size_t c = 0; c < script.events.size(); ++c) {
        if (static_cast<int>(c) == target_event) continue;
        const auto ids = cloze::event_token_ids(script.events[c], script.entities, model.vocab);
        ctx.context_reprs.push_back(eventcomp::compose_event(model, ids));
        ctx.context_indices.push_back(c);
    }
    return ctx;
}

inline double score_candidate_prepared(const Script& script, const ClozeInstance& inst,
                                       int candidate, const eventcomp::EventCompModel& model,
                                       const ScoringContext& ctx, Aggregation agg) {
    const corpus::Event completed = cloze::replace_argument(
        script.events[inst.target_event], inst.position, candidate, inst.preposition);
    const auto target_ids = cloze::event_token_ids(completed, script.entities, model.vocab);
    const std::vector<float> target_repr = eventcomp::compose_event(model, target_ids);
    const std::vector<float> extra =
        salience::encode_extra_features(inst.position,
                                        salience::extract_salience(script.entities[candidate]),
                                        model.hp.raw_salience)
            .masked<float>(model.mask);

    double score = 0;
    bool first = true;
    for (const auto& context_repr : ctx.context_reprs) {
        const double coh =
            static_cast<double>(eventcomp::coherence(model, context_repr, target_repr, extra));
        score = detail::aggregate(score, coh, agg, first);
        first = false;
    }
    return score;
}

// Narrative coherence score of one candidate (Eq. 2): max over context events
// of the pairwise coherence with the completed target event.
inline double score_candidate(const Script& script, const ClozeInstance& inst, int candidate,
                              const eventcomp::EventCompModel& model,
                              Aggregation agg = Aggregation::max) {
    if (std::find(inst.candidates.begin(), inst.candidates.end(), candidate) ==
        inst.candidates.end())
        throw ContractError("score_candidate: candidate not in the instance's list");
    const ScoringContext ctx = prepare_contexts(script, inst.target_event, model);
    return score_candidate_prepared(script, inst, candidate, model, ctx, agg);
}

inline Prediction predict(const Script& script, const ClozeInstance& inst,
                          const eventcomp::EventCompModel& model,
                          Aggregation agg = Aggregation::max) {
    Prediction p = detail::prediction_shell(inst);
    const ScoringContext ctx = prepare_contexts(script, inst.target_event, model);
    std::vector<std::pair<int, double>> scores;
    scores.reserve(inst.candidates.size());
    for (int cand : inst.candidates)
        scores.emplace_back(cand, score_candidate_prepared(script, inst, cand, model, ctx, agg));
    detail::rank_and_choose(p, std::move(scores));
    return p;
}

// ---------------------------------------------------------------------------
// Baselines

inline Prediction baseline_random(const ClozeInstance& inst, Rng& rng) {
    if (inst.candidates.empty()) throw ContractError("baseline_random: empty candidate list");
    Prediction p = detail::prediction_shell(inst);
    const int pick = inst.candidates[rng.index(inst.candidates.size())];
    std::vector<std::pair<int, double>> scores;
    for (int cand : inst.candidates) scores.emplace_back(cand, cand == pick ? 1.0 : 0.0);
    detail::rank_and_choose(p, std::move(scores));
    return p;
}

inline Prediction baseline_mostfreq(const Script& script, const ClozeInstance& inst) {
    if (inst.candidates.empty()) throw ContractError("baseline_mostfreq: empty candidate list");
    Prediction p = detail::prediction_shell(inst);
    std::vector<std::pair<int, double>> scores;
    for (int cand : inst.candidates)
        scores.emplace_back(cand,
                            static_cast<double>(script.entities[cand].mentions.size()));
    detail::rank_and_choose(p, std::move(scores));
    return p;
}

inline Prediction baseline_eventword2vec(const Script& script, const ClozeInstance& inst,
                                         const embeddings::EmbeddingTable& table,
                                         Aggregation agg = Aggregation::max) {
    if (inst.candidates.empty())
        throw ContractError("baseline_eventword2vec: empty candidate list");
    if (script.events.size() < 2)
        throw ContractError("baseline_eventword2vec: single-event script has no context");
    Prediction p = detail::prediction_shell(inst);

    std::vector<std::vector<float>> context_reprs;
    for (size_t c = 0; c < script.events.size(); ++c) {
        if (static_cast<int>(c) == inst.target_event) continue;
        context_reprs.push_back(
            embeddings::eventword2vec_repr(script.events[c], script.entities, table));
    }

    std::vector<std::pair<int, double>> scores;
    for (int cand : inst.candidates) {
        const corpus::Event completed = cloze::replace_argument(
            script.events[inst.target_event], inst.position, cand, inst.preposition);
        const auto target = embeddings::eventword2vec_repr(completed, script.entities, table);
        double score = 0;
        bool first = true;
        for (const auto& ctx : context_reprs) {
            score = detail::aggregate(score, embeddings::cosine(target, ctx), agg, first);
            first = false;
        }
        scores.emplace_back(cand, score);
    }
    detail::rank_and_choose(p, std::move(scores));
    return p;
}

// ---------------------------------------------------------------------------
// Prediction dump: one line per instance with the full ranking.

inline void write_predictions(const std::string& path, const std::vector<Prediction>& preds,
                              const std::string& model_tag) {
    atomic_write(path, [&](std::ostream& out) {
        out << "#evimp-predictions v1\n";
        for (const Prediction& p : preds) {
            out << p.doc_id << "\t" << p.target_event << "\t" << corpus::to_string(p.position)
                << "\t" << p.gold << "\t" << p.chosen << "\t";
            char buf[40];
            for (size_t i = 0; i < p.ranked.size(); ++i) {
                if (i) out << ",";
                std::snprintf(buf, sizeof(buf), "%d:%.6f", p.ranked[i].first,
                              p.ranked[i].second);
                out << buf;
            }
            out << "\t" << model_tag << "\n";
        }
    });
}

}  // namespace evimp::inference
