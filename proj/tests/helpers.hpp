#pragma once

// Shared fixtures: hand-built scripts, random script generation for property
// tests, and temporary-directory plumbing.

#include <filesystem>

#include "evimp/cloze.hpp"
#include "evimp/corpus.hpp"

namespace testing {

using namespace evimp;
using corpus::ArgPosition;
using corpus::Argument;
using corpus::Entity;
using corpus::Event;
using corpus::Mention;
using corpus::MentionKind;
using corpus::Script;

inline Entity make_entity(int id, std::vector<std::tuple<int, std::string, MentionKind>> mentions) {
    Entity e;
    e.id = id;
    for (auto& [sent, lemma, kind] : mentions) e.mentions.push_back({sent, lemma, kind, -1});
    return e;
}

// A small script shaped like the running example: an energy company story
// with three entities and five events, two of which carry plain-lemma
// direct objects ("electricity", "energy").
inline Script example_script() {
    Script s;
    s.doc_id = "fig1";
    s.sentences_count = 5;
    s.entities.push_back(make_entity(0, {{0, "company", MentionKind::nominal},
                                         {1, "it", MentionKind::pronominal},
                                         {3, "company", MentionKind::nominal}}));
    s.entities.push_back(make_entity(1, {{0, "firm", MentionKind::nominal},
                                         {2, "firm", MentionKind::nominal}}));
    s.entities.push_back(make_entity(2, {{1, "plant", MentionKind::nominal},
                                         {2, "plant", MentionKind::nominal},
                                         {4, "it", MentionKind::pronominal}}));

    Event e0;
    e0.verb = "produce";
    e0.subj = Argument::entity_ref(0);
    e0.dobj = Argument::lemma_filler("electricity");
    s.events.push_back(e0);

    Event e1;
    e1.verb = "sell";
    e1.subj = Argument::entity_ref(0);
    e1.dobj = Argument::lemma_filler("energy");
    e1.pobj = Argument::entity_ref(2, "to");
    s.events.push_back(e1);

    Event e2;
    e2.verb = "acquire";
    e2.subj = Argument::entity_ref(1);
    e2.dobj = Argument::entity_ref(2);
    s.events.push_back(e2);

    Event e3;
    e3.verb = "operate";
    e3.subj = Argument::entity_ref(1);
    e3.dobj = Argument::entity_ref(2);
    s.events.push_back(e3);

    Event e4;
    e4.verb = "expand";
    e4.subj = Argument::entity_ref(2);
    s.events.push_back(e4);
    return s;
}

// Random scripts for property tests: valid by construction, with a mix of
// entity refs, lemma fillers and empty slots.
inline Script random_script(Rng& rng, int min_entities = 2, int min_events = 2) {
    static const char* lemmas[] = {"bank",  "river", "stone", "wind", "tree",
                                   "cloud", "horse", "road",  "song", "fire"};
    static const char* verbs[] = {"carry", "build", "find", "watch", "move", "hold"};
    static const char* preps[] = {"to", "in", "with", "on", "at"};
    static const MentionKind kinds[] = {MentionKind::named, MentionKind::nominal,
                                        MentionKind::pronominal};

    Script s;
    s.doc_id = "rnd-" + std::to_string(rng.below(1u << 30));
    const int n_entities = min_entities + static_cast<int>(rng.below(4));
    const int n_events = min_events + static_cast<int>(rng.below(5));
    s.sentences_count = n_events + static_cast<int>(rng.below(3));

    for (int i = 0; i < n_entities; ++i) {
        Entity e;
        e.id = i;
        const int n_mentions = 2 + static_cast<int>(rng.below(4));
        std::vector<int> sents;
        for (int m = 0; m < n_mentions; ++m)
            sents.push_back(static_cast<int>(rng.below(static_cast<uint64_t>(s.sentences_count))));
        std::sort(sents.begin(), sents.end());
        bool has_non_pronominal = false;
        for (int m = 0; m < n_mentions; ++m) {
            MentionKind kind = kinds[rng.below(3)];
            if (m + 1 == n_mentions && !has_non_pronominal) kind = MentionKind::nominal;
            if (kind != MentionKind::pronominal) has_non_pronominal = true;
            e.mentions.push_back({sents[static_cast<size_t>(m)],
                                  kind == MentionKind::pronominal ? "it"
                                                                  : lemmas[rng.below(10)],
                                  kind, -1});
        }
        s.entities.push_back(std::move(e));
    }

    for (int i = 0; i < n_events; ++i) {
        Event ev;
        ev.verb = verbs[rng.below(6)];
        for (ArgPosition p : corpus::kAllPositions) {
            const uint64_t kind = rng.below(3);
            const std::string prep =
                p == ArgPosition::pobj ? preps[rng.below(5)] : std::string();
            if (kind == 0)
                ev.arg(p) = Argument::entity_ref(static_cast<int>(rng.below(
                                                     static_cast<uint64_t>(n_entities))),
                                                 prep);
            else if (kind == 1)
                ev.arg(p) = Argument::lemma_filler(lemmas[rng.below(10)], prep);
        }
        s.events.push_back(std::move(ev));
    }
    return s;
}

class TempDir {
  public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() /
                ("evimp-test-" + name + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

}  // namespace testing
