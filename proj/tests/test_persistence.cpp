#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "evimp/eventcomp.hpp"
#include "evimp/inference.hpp"
#include "helpers.hpp"

using namespace evimp;

namespace {

struct World {
    std::vector<corpus::Script> scripts;
    corpus::Vocabulary vocab;
    embeddings::EmbeddingTable table;
    eventcomp::EventCompModel model;
};

World small_world(uint64_t seed) {
    World w;
    Rng rng(seed);
    for (int i = 0; i < 30; ++i) {
        corpus::Script s = testing::random_script(rng, 3, 3);
        s.doc_id = "doc-" + std::to_string(i);
        w.scripts.push_back(std::move(s));
    }
    w.vocab = corpus::build_vocabulary(w.scripts, 0, 10);

    w.table.dim = 8;
    w.table.vocab = w.vocab;
    w.table.input.resize(w.vocab.size() * 8);
    for (float& v : w.table.input) v = static_cast<float>((rng.real() - 0.5) * 0.4);
    w.table.output.assign(w.table.input.size(), 0.0f);

    eventcomp::EventCompHyperParams hp;
    hp.dim = 8;
    hp.arg_hidden = 12;
    hp.event_repr = 10;
    hp.pair_hidden1 = 11;
    hp.pair_hidden2 = 9;
    w.model = eventcomp::make_model(w.table, hp, salience::SalienceMask::all(), seed, "world");
    return w;
}

double score_sum(const World& w, const eventcomp::EventCompModel& m) {
    // Deterministic scoring probe over a bag of events from the world.
    double total = 0;
    for (const auto& s : w.scripts) {
        if (s.events.size() < 2) continue;
        Rng gen(derive_seed(1, s.doc_id));
        const auto instances = cloze::generate_cloze_instances(s, gen, 2);
        for (const auto& inst : instances) {
            const auto p = inference::predict(s, inst, m);
            for (const auto& [id, score] : p.ranked) total += score;
        }
    }
    return total;
}

}  // namespace

TEST_CASE("checkpoint round-trips keep scores within 1e-6") {
    const World w = small_world(3);
    testing::TempDir dir("persist");

    eventcomp::save_checkpoint_text(dir.file("m.ckpt"), w.model, "probe");
    eventcomp::save_checkpoint_binary(dir.file("m.ecm"), w.model, "probe");
    const auto text_model = eventcomp::load_checkpoint(dir.file("m.ckpt"), w.vocab);
    const auto bin_model = eventcomp::load_checkpoint(dir.file("m.ecm"), w.vocab);

    const double base = score_sum(w, w.model);
    CHECK(std::fabs(score_sum(w, text_model) - base) < 1e-6);
    CHECK(std::fabs(score_sum(w, bin_model) - base) < 1e-6);

    // Per-event score deltas on random events stay under 1e-6 as well.
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto& s = w.scripts[rng.index(w.scripts.size())];
        if (s.events.size() < 2) continue;
        const auto ids =
            cloze::event_token_ids(s.events[0], s.entities, w.vocab);
        const auto ids2 =
            cloze::event_token_ids(s.events[1], s.entities, w.vocab);
        const auto extra = salience::encode_extra_features(
                               corpus::ArgPosition::subj,
                               salience::extract_salience(s.entities[0]))
                               .masked<float>(w.model.mask);
        const float a = eventcomp::coherence(w.model, eventcomp::compose_event(w.model, ids),
                                             eventcomp::compose_event(w.model, ids2), extra);
        const float b = eventcomp::coherence(text_model, eventcomp::compose_event(text_model, ids),
                                             eventcomp::compose_event(text_model, ids2), extra);
        CHECK(std::fabs(a - b) < 1e-6f);
    }
}

TEST_CASE("embedding round-trips keep representations identical") {
    const World w = small_world(5);
    testing::TempDir dir("embrt");
    embeddings::write_embeddings_text(dir.file("e.txt"), w.table);
    embeddings::write_embeddings_binary(dir.file("e.bin"), w.table);
    const auto text_table = embeddings::read_embeddings(dir.file("e.txt"), &w.vocab);
    const auto bin_table = embeddings::read_embeddings(dir.file("e.bin"), &w.vocab);

    for (const auto& s : w.scripts)
        for (const auto& ev : s.events) {
            const auto base = embeddings::eventword2vec_repr(ev, s.entities, w.table);
            CHECK(embeddings::eventword2vec_repr(ev, s.entities, text_table) == base);
            CHECK(embeddings::eventword2vec_repr(ev, s.entities, bin_table) == base);
        }
}

TEST_CASE("corpus files round-trip structurally") {
    const World w = small_world(7);
    testing::TempDir dir("corpusrt");
    corpus::write_corpus(dir.file("c.jsonl"), w.scripts);
    const auto back = corpus::read_corpus(dir.file("c.jsonl"));
    REQUIRE(back.size() == w.scripts.size());
    for (size_t i = 0; i < back.size(); ++i) REQUIRE(back[i] == w.scripts[i]);
}

TEST_CASE("atomic writes leave no temp file and replace the target completely") {
    testing::TempDir dir("atomic");
    const std::string path = dir.file("out.txt");
    atomic_write(path, [](std::ostream& out) { out << "first\n"; });
    atomic_write(path, [](std::ostream& out) { out << "second\n"; });
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "second");
    CHECK(!std::filesystem::exists(path + ".tmp"));

    // A writer that throws leaves the original target untouched.
    try {
        atomic_write(path, [](std::ostream&) { throw IoError("boom"); });
    } catch (const IoError&) {
    }
    std::ifstream again(path);
    REQUIRE(std::getline(again, line));
    CHECK(line == "second");
}

TEST_CASE("vocabulary hash changes with content") {
    const World a = small_world(11);
    corpus::Vocabulary tweaked = a.vocab;
    REQUIRE(tweaked.counts.size() > 1);
    tweaked.counts[1] += 1;
    CHECK(a.vocab.content_hash() != tweaked.content_hash());
}
