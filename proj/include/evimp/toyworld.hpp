#pragma once

// Synthetic corpora for the learning checks.
//
// Selectional world: 8 verbs whose three argument slots each deterministically
// select one of 4 entity types; scripts hold 2-3 "storylines" with distinct
// themes and one entity per (storyline, type). A removed argument is uniquely
// recoverable from the verb slot's type plus theme agreement with the target
// event's remaining arguments, so a coherence model can solve the cloze task
// while the random baseline cannot.
//
// Salience world: event semantics are uninformative (verbs and filler lemmas
// are random) and the gold entity of every cloze slot is the document's
// strictly most-mentioned entity. head_count is constant and the first-mention
// location is uniformly distributed for all entities, so the `mentions` group
// is the only informative salience signal.

#include "evimp/corpus.hpp"

namespace evimp::toyworld {

using corpus::Argument;
using corpus::ArgPosition;
using corpus::Entity;
using corpus::Event;
using corpus::Mention;
using corpus::MentionKind;
using corpus::Script;

struct ToyWorldParams {
    int scripts = 2000;
    uint64_t seed = 7;
    std::string id_prefix;  // defaults to the kind name; eval splits use another
};

// ---------------------------------------------------------------------------
// Selectional world

namespace detail {

inline constexpr int kTypes = 4;
inline constexpr int kThemes = 24;
inline const char* kTypeBase[kTypes] = {"fox", "axe", "lake", "gem"};
inline const char* kVerbs[8] = {"hunt", "carve", "sail", "trade", "forge", "herd", "plant", "fish"};
inline const char* kPreps[8] = {"with", "at", "to", "in", "on", "for", "near", "from"};

// Verb k omits type (k % 4); its three slots select the remaining types,
// rotated for the second verb of each pair.
inline std::array<int, 3> verb_slot_types(int verb) {
    const int omit = verb % kTypes;
    std::array<int, 3> types{};
    int n = 0;
    for (int t = 0; t < kTypes; ++t)
        if (t != omit) types[static_cast<size_t>(n++)] = t;
    if (verb >= kTypes) types = {types[1], types[2], types[0]};
    return types;
}

inline std::string type_lemma(int type, int theme) {
    return std::string(kTypeBase[type]) + std::to_string(theme);
}

}  // namespace detail

inline Script make_selectional_script(const std::string& doc_id, Rng& rng) {
    Script script;
    script.doc_id = doc_id;

    const int n_storylines = 2 + static_cast<int>(rng.below(2));  // 2 or 3
    std::vector<int> themes;
    while (static_cast<int>(themes.size()) < n_storylines) {
        const int theme = static_cast<int>(rng.below(detail::kThemes));
        if (std::find(themes.begin(), themes.end(), theme) == themes.end())
            themes.push_back(theme);
    }

    struct Storyline {
        int theme;
        int omitted_type;                 // -1 when all four types are present
        std::array<int, detail::kTypes> entity_of_type;  // -1 when absent
        std::vector<int> verbs;
    };
    std::vector<Storyline> storylines;
    std::vector<int> entity_type, entity_theme;

    for (int s = 0; s < n_storylines; ++s) {
        Storyline line;
        line.theme = themes[static_cast<size_t>(s)];
        line.entity_of_type.fill(-1);
        const bool full = rng.bernoulli(0.5);
        line.omitted_type = full ? -1 : static_cast<int>(rng.below(detail::kTypes));
        for (int t = 0; t < detail::kTypes; ++t) {
            if (t == line.omitted_type) continue;
            line.entity_of_type[static_cast<size_t>(t)] = static_cast<int>(entity_type.size());
            entity_type.push_back(t);
            entity_theme.push_back(line.theme);
        }
        if (line.omitted_type < 0)
            for (int v = 0; v < 8; ++v) line.verbs.push_back(v);
        else
            line.verbs = {line.omitted_type, line.omitted_type + detail::kTypes};
        storylines.push_back(std::move(line));
    }

    std::vector<Event> events;
    for (const auto& line : storylines) {
        const int n_events = 3 + static_cast<int>(rng.below(3));  // 3..5
        for (int e = 0; e < n_events; ++e) {
            const int verb = line.verbs[rng.index(line.verbs.size())];
            const auto slot_types = detail::verb_slot_types(verb);
            Event ev;
            ev.verb = detail::kVerbs[verb];
            ev.subj = Argument::entity_ref(line.entity_of_type[static_cast<size_t>(slot_types[0])]);
            ev.dobj = Argument::entity_ref(line.entity_of_type[static_cast<size_t>(slot_types[1])]);
            ev.pobj = Argument::entity_ref(line.entity_of_type[static_cast<size_t>(slot_types[2])],
                                           detail::kPreps[verb]);
            events.push_back(std::move(ev));
        }
    }
    rng.shuffle(events);
    script.events = std::move(events);
    script.sentences_count = static_cast<int>(script.events.size());

    for (size_t i = 0; i < entity_type.size(); ++i) {
        Entity entity;
        entity.id = static_cast<int>(i);
        const std::string lemma =
            detail::type_lemma(entity_type[i], entity_theme[i]);
        const int n_mentions = 2 + static_cast<int>(rng.below(3));  // 2..4
        std::vector<int> sents;
        for (int m = 0; m < n_mentions; ++m)
            sents.push_back(static_cast<int>(rng.below(
                static_cast<uint64_t>(std::max(1, script.sentences_count)))));
        std::sort(sents.begin(), sents.end());
        for (int sent : sents)
            entity.mentions.push_back({sent, lemma,
                                       rng.bernoulli(0.3) ? MentionKind::named
                                                          : MentionKind::nominal,
                                       -1});
        script.entities.push_back(std::move(entity));
    }
    return script;
}

inline std::vector<Script> make_selectional_world(const ToyWorldParams& params) {
    std::vector<Script> scripts;
    scripts.reserve(static_cast<size_t>(params.scripts));
    const std::string prefix = params.id_prefix.empty() ? "sel" : params.id_prefix;
    for (int i = 0; i < params.scripts; ++i) {
        char id[48];
        std::snprintf(id, sizeof(id), "%s-%05d", prefix.c_str(), i);
        Rng rng(derive_seed(params.seed, id));
        scripts.push_back(make_selectional_script(id, rng));
    }
    return scripts;
}

// ---------------------------------------------------------------------------
// Salience world

namespace detail {

inline constexpr int kPoolSize = 40;
inline std::string pool_lemma(Rng& rng) {
    return "thing" + std::to_string(rng.below(kPoolSize));
}

// total mentions, with the first-mention sentence sampled uniformly and the
// head lemma appearing exactly twice so only the mentions group separates the
// protagonist from the decoys.
inline Entity make_chain_entity(int total, const std::string& lemma, int n_sentences, Rng& rng) {
    Entity entity;
    const int first = static_cast<int>(rng.below(static_cast<uint64_t>(n_sentences)));
    std::vector<int> sents{first};
    for (int m = 1; m < total; ++m)
        sents.push_back(first + static_cast<int>(rng.below(
                                    static_cast<uint64_t>(n_sentences - first))));
    std::sort(sents.begin(), sents.end());
    for (int m = 0; m < total; ++m) {
        const bool nominal = m < 2;
        entity.mentions.push_back({sents[static_cast<size_t>(m)],
                                   nominal ? lemma : std::string("it"),
                                   nominal ? MentionKind::nominal : MentionKind::pronominal, -1});
    }
    return entity;
}

}  // namespace detail

inline Script make_salience_script(const std::string& doc_id, Rng& rng) {
    Script script;
    script.doc_id = doc_id;

    const int n_events = 8 + static_cast<int>(rng.below(5));  // 8..12
    script.sentences_count = n_events;

    const int n_decoys = 5 + static_cast<int>(rng.below(4));  // 5..8

    // Entity list is shuffled afterwards so the protagonist id carries no
    // signal of its own.
    std::vector<Entity> entities;
    entities.push_back(detail::make_chain_entity(10 + static_cast<int>(rng.below(7)),
                                                 detail::pool_lemma(rng), n_events, rng));
    for (int d = 0; d < n_decoys; ++d)
        entities.push_back(detail::make_chain_entity(2 + static_cast<int>(rng.below(4)),
                                                     detail::pool_lemma(rng), n_events, rng));
    std::vector<size_t> order(entities.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    int protagonist = -1;
    for (size_t new_id = 0; new_id < order.size(); ++new_id) {
        Entity e = std::move(entities[order[new_id]]);
        e.id = static_cast<int>(new_id);
        if (order[new_id] == 0) protagonist = static_cast<int>(new_id);
        script.entities.push_back(std::move(e));
    }

    // One event carries the protagonist as an entity argument; all other
    // events have plain-lemma or empty slots, so context events never expose
    // candidate tokens and semantics stay uninformative.
    const int entity_event = static_cast<int>(rng.below(static_cast<uint64_t>(n_events)));
    for (int e = 0; e < n_events; ++e) {
        Event ev;
        ev.verb = "act" + std::to_string(rng.below(8));
        const int entity_slot =
            e == entity_event ? static_cast<int>(rng.below(3)) : -1;
        for (ArgPosition p : corpus::kAllPositions) {
            const int slot = static_cast<int>(p);
            const std::string prep =
                p == ArgPosition::pobj ? detail::kPreps[rng.below(8)] : std::string();
            if (slot == entity_slot)
                ev.arg(p) = Argument::entity_ref(protagonist, prep);
            else if (rng.bernoulli(0.5))
                ev.arg(p) = Argument::lemma_filler(detail::pool_lemma(rng), prep);
        }
        script.events.push_back(std::move(ev));
    }
    return script;
}

inline std::vector<Script> make_salience_world(const ToyWorldParams& params) {
    std::vector<Script> scripts;
    scripts.reserve(static_cast<size_t>(params.scripts));
    const std::string prefix = params.id_prefix.empty() ? "sal" : params.id_prefix;
    for (int i = 0; i < params.scripts; ++i) {
        char id[48];
        std::snprintf(id, sizeof(id), "%s-%05d", prefix.c_str(), i);
        Rng rng(derive_seed(params.seed, id));
        scripts.push_back(make_salience_script(id, rng));
    }
    return scripts;
}

inline std::vector<Script> make_world(const std::string& kind, const ToyWorldParams& params) {
    if (kind == "selectional") return make_selectional_world(params);
    if (kind == "salience") return make_salience_world(params);
    throw FormatError("unknown toy-world kind: " + kind);
}

}  // namespace evimp::toyworld
