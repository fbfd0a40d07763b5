#include <catch2/catch_amalgamated.hpp>

#include "evimp/inference.hpp"
#include "helpers.hpp"

using namespace evimp;
using namespace evimp::inference;
using cloze::ClozeInstance;
using corpus::ArgPosition;
using corpus::Script;

namespace {

eventcomp::EventCompModel model_for(const Script& s, uint64_t seed) {
    corpus::VocabCounts counts;
    counts.add(s);
    const corpus::Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);
    embeddings::EmbeddingTable init;
    init.dim = 6;
    init.vocab = vocab;
    init.input.resize(vocab.size() * 6);
    Rng rng(seed);
    for (float& v : init.input) v = static_cast<float>((rng.real() - 0.5) * 0.4);
    eventcomp::EventCompHyperParams hp;
    hp.dim = 6;
    hp.arg_hidden = 10;
    hp.event_repr = 8;
    hp.pair_hidden1 = 9;
    hp.pair_hidden2 = 7;
    return eventcomp::make_model(init, hp, salience::SalienceMask::all(), seed);
}

ClozeInstance instance_for(const Script& s, int target, ArgPosition pos) {
    ClozeInstance inst;
    inst.doc_id = s.doc_id;
    inst.target_event = target;
    inst.position = pos;
    const corpus::Argument& a = s.events[static_cast<size_t>(target)].arg(pos);
    inst.preposition = a.preposition;
    inst.gold_entity = a.entity;
    for (size_t i = 0; i < s.entities.size(); ++i) inst.candidates.push_back(static_cast<int>(i));
    return inst;
}

}  // namespace

TEST_CASE("score_candidate equals the single pairwise coherence with one context") {
    Script s = testing::example_script();
    s.events.resize(2);  // target + one context
    const auto model = model_for(s, 3);
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);

    const double score = score_candidate(s, inst, 0, model, Aggregation::max);
    const double sum_score = score_candidate(s, inst, 0, model, Aggregation::sum);
    CHECK(score == Catch::Approx(sum_score));  // singleton max == sum

    // Recompute the pair by hand.
    const corpus::Event completed =
        cloze::replace_argument(s.events[1], ArgPosition::pobj, 0, inst.preposition);
    const auto ctx = eventcomp::compose_event(
        model, cloze::event_token_ids(s.events[0], s.entities, model.vocab));
    const auto tgt = eventcomp::compose_event(
        model, cloze::event_token_ids(completed, s.entities, model.vocab));
    const auto extra = salience::encode_extra_features(
                           ArgPosition::pobj, salience::extract_salience(s.entities[0]))
                           .masked<float>(model.mask);
    const double manual = eventcomp::coherence(model, ctx, tgt, extra);
    CHECK(score == Catch::Approx(manual));
}

TEST_CASE("score_candidate errors without context and outside the candidate list") {
    Script s = testing::example_script();
    const auto model = model_for(s, 4);
    ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);
    CHECK_THROWS_AS(score_candidate(s, inst, 99, model), ContractError);

    Script single = s;
    single.events.resize(1);
    ClozeInstance sinst = instance_for(single, 0, ArgPosition::subj);
    CHECK_THROWS_AS(score_candidate(single, sinst, 0, model), ContractError);
}

TEST_CASE("predict ranks candidates deterministically with id tie-breaks") {
    const Script s = testing::example_script();
    const auto model = model_for(s, 5);
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);

    const Prediction p = predict(s, inst, model);
    REQUIRE(p.ranked.size() == 3);
    CHECK(p.chosen == p.ranked.front().first);
    for (size_t i = 1; i < p.ranked.size(); ++i) {
        const bool ordered = p.ranked[i - 1].second > p.ranked[i].second ||
                             (p.ranked[i - 1].second == p.ranked[i].second &&
                              p.ranked[i - 1].first < p.ranked[i].first);
        CHECK(ordered);
    }

    // Permuting the candidate list does not change the outcome.
    ClozeInstance shuffled = inst;
    std::swap(shuffled.candidates[0], shuffled.candidates[2]);
    const Prediction q = predict(s, shuffled, model);
    CHECK(q.chosen == p.chosen);
    CHECK(q.ranked == p.ranked);

    // A 1-candidate instance picks that candidate.
    ClozeInstance one = inst;
    one.candidates = {inst.gold_entity};
    const Prediction r = predict(s, one, model);
    CHECK(r.chosen == inst.gold_entity);
    CHECK(r.correct);
}

TEST_CASE("identical scores all round fall back to the lowest entity id") {
    const Script s = testing::example_script();
    auto model = model_for(s, 6);
    // Zero output layer: every coherence is exactly 0.5.
    std::fill(model.out.W.a.begin(), model.out.W.a.end(), 0.0f);
    model.out.b[0] = 0.0f;
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);
    const Prediction p = predict(s, inst, model);
    CHECK(p.chosen == 0);
}

TEST_CASE("max-aggregated scores never exceed sum-aggregated scores") {
    const Script s = testing::example_script();
    const auto model = model_for(s, 7);
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);
    for (int cand : inst.candidates) {
        const double mx = score_candidate(s, inst, cand, model, Aggregation::max);
        const double sm = score_candidate(s, inst, cand, model, Aggregation::sum);
        CHECK(mx <= sm + 1e-12);  // coherence is positive
    }
}

TEST_CASE("baseline_random is uniform and seeded") {
    const Script s = testing::example_script();
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);

    Rng a(11), b(11);
    for (int i = 0; i < 20; ++i)
        CHECK(baseline_random(inst, a).chosen == baseline_random(inst, b).chosen);

    std::map<int, int> counts;
    Rng rng(13);
    const int n = 30000;
    for (int i = 0; i < n; ++i) counts[baseline_random(inst, rng).chosen] += 1;
    const double p = 1.0 / 3.0;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (const auto& [cand, c] : counts)
        CHECK(std::fabs(c - n * p) <= 3.0 * sigma);

    ClozeInstance empty = inst;
    empty.candidates.clear();
    Rng r(1);
    CHECK_THROWS_AS(baseline_random(empty, r), ContractError);

    ClozeInstance one = inst;
    one.candidates = {inst.gold_entity};
    CHECK(baseline_random(one, rng).correct);
}

TEST_CASE("baseline_mostfreq equals brute-force argmax over mention totals") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const Script s = testing::random_script(rng);
        ClozeInstance inst;
        inst.doc_id = s.doc_id;
        inst.gold_entity = 0;
        for (size_t i = 0; i < s.entities.size(); ++i)
            inst.candidates.push_back(static_cast<int>(i));
        const Prediction p = baseline_mostfreq(s, inst);

        int best = -1;
        size_t best_total = 0;
        for (const auto& e : s.entities)
            if (e.mentions.size() > best_total) {  // ties keep the lower id
                best_total = e.mentions.size();
                best = e.id;
            }
        REQUIRE(p.chosen == best);
    }
}

TEST_CASE("baseline_eventword2vec prefers the co-occurring candidate") {
    // Toy world: verb "feed" only ever takes the animal entity as dobj; the
    // pseudo-corpus plants feed-pred next to the animal token.
    Script s;
    s.doc_id = "toy";
    s.sentences_count = 4;
    s.entities.push_back(testing::make_entity(0, {{0, "farmer", corpus::MentionKind::nominal},
                                                  {2, "farmer", corpus::MentionKind::nominal}}));
    s.entities.push_back(testing::make_entity(1, {{0, "horse", corpus::MentionKind::nominal},
                                                  {1, "horse", corpus::MentionKind::nominal}}));
    corpus::Event feed;
    feed.verb = "feed";
    feed.subj = corpus::Argument::entity_ref(0);
    feed.dobj = corpus::Argument::entity_ref(1);
    corpus::Event walk;
    walk.verb = "walk";
    walk.subj = corpus::Argument::entity_ref(0);
    s.events = {feed, walk};

    std::vector<std::vector<std::string>> sentences;
    Rng mix(19);
    for (int i = 0; i < 400; ++i) {
        sentences.push_back({"feed-pred", "horse-dobj", "farmer-subj"});
        sentences.push_back({"walk-pred", "farmer-subj"});
        sentences.push_back({"sleep-pred", "farmer-subj"});
    }
    corpus::VocabCounts counts;
    counts.add(s);
    for (const auto& sent : sentences)
        for (const auto& tok : sent) counts.tokens[tok] += 1;
    const corpus::Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);

    std::vector<std::vector<int>> ids;
    for (const auto& sent : sentences) ids.push_back(embeddings::to_token_ids(sent, vocab));
    embeddings::SgnsParams params;
    params.dim = 16;
    params.window = 3;
    params.negatives = 5;
    params.subsample_t = 1.0;
    params.epochs = 10;
    const auto table = embeddings::train_sgns(ids, params, vocab, 21).table;

    // Cloze: remove the dobj of "feed"; the horse must outrank the farmer.
    const ClozeInstance inst = instance_for(s, 0, ArgPosition::dobj);
    const Prediction p = baseline_eventword2vec(s, inst, table);
    CHECK(p.chosen == 1);

    // A context identical to the completed target scores cosine 1.
    Script twin = s;
    twin.events = {feed, feed};
    const ClozeInstance tinst = instance_for(twin, 0, ArgPosition::dobj);
    const Prediction tp = baseline_eventword2vec(twin, tinst, table);
    CHECK(tp.ranked.front().second == Catch::Approx(1.0));
    CHECK(tp.chosen == 1);
}

TEST_CASE("prediction dump format") {
    const Script s = testing::example_script();
    const auto model = model_for(s, 23);
    const ClozeInstance inst = instance_for(s, 1, ArgPosition::pobj);
    const Prediction p = predict(s, inst, model);

    testing::TempDir dir("pred");
    write_predictions(dir.file("p.tsv"), {p}, "unit");
    std::ifstream in(dir.file("p.tsv"));
    std::string header, line;
    REQUIRE(std::getline(in, header));
    CHECK(starts_with(header, "#evimp-predictions"));
    REQUIRE(std::getline(in, line));
    const auto fields = split(line, '\t');
    REQUIRE(fields.size() == 7);
    CHECK(fields[0] == "fig1");
    CHECK(fields[1] == "1");
    CHECK(fields[2] == "pobj");
    CHECK(fields[6] == "unit");
    CHECK(split(fields[5], ',').size() == 3);
}
