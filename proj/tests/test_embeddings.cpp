#include <catch2/catch_amalgamated.hpp>

#include "evimp/embeddings.hpp"
#include "helpers.hpp"

using namespace evimp;
using namespace evimp::embeddings;
using corpus::Vocabulary;

namespace {

// Vocabulary straight from token/count pairs, bypassing thresholds.
Vocabulary direct_vocab(const std::vector<std::pair<std::string, long long>>& items) {
    corpus::VocabCounts counts;
    for (const auto& [tok, c] : counts.tokens) (void)tok, (void)c;
    for (const auto& [tok, c] : items) counts.tokens[tok] = c;
    return corpus::build_vocabulary_from_counts(counts, 0, 10);
}

}  // namespace

TEST_CASE("build_pseudo_sentence lists predicate then arguments in slot order") {
    const auto s = testing::example_script();
    const auto sentence = build_pseudo_sentence(s);
    // e0 produce: verb + subj + dobj; e1 sell: verb + subj + dobj + pobj; ...
    REQUIRE(sentence.size() >= 7);
    CHECK(sentence[0] == "produce-pred");
    CHECK(sentence[1] == "company-subj");
    CHECK(sentence[2] == "electricity-dobj");
    CHECK(sentence[3] == "sell-pred");
    CHECK(sentence[5] == "energy-dobj");
    CHECK(sentence[6] == "plant-prep_to");

    corpus::Script empty;
    CHECK(build_pseudo_sentence(empty).empty());

    corpus::Script one;
    one.entities.push_back(testing::make_entity(
        0, {{0, "crowd", corpus::MentionKind::nominal}, {1, "crowd", corpus::MentionKind::nominal}}));
    corpus::Event ev;
    ev.verb = "break_out";
    ev.subj = corpus::Argument::entity_ref(0);
    one.events.push_back(ev);
    CHECK(build_pseudo_sentence(one) ==
          std::vector<std::string>{"break_out-pred", "crowd-subj"});
}

TEST_CASE("cosine identities") {
    const std::vector<float> v{1.0f, 2.0f, -1.0f};
    std::vector<float> neg = v;
    for (float& x : neg) x = -x;
    CHECK(cosine(v, v) == Catch::Approx(1.0));
    CHECK(cosine(v, neg) == Catch::Approx(-1.0));
    CHECK(cosine(std::vector<float>{1.0f, 0.0f}, std::vector<float>{0.0f, 1.0f}) ==
          Catch::Approx(0.0));
    // Zero vectors compare as 0 by definition.
    CHECK(cosine(std::vector<float>{0.0f, 0.0f, 0.0f}, v) == 0.0);
}

TEST_CASE("alias sampler matches the unigram^0.75 distribution within 3 sigma") {
    const Vocabulary vocab = direct_vocab({{"a-pred", 1000},
                                           {"b-pred", 500},
                                           {"c-subj", 120},
                                           {"d-dobj", 60},
                                           {"e-subj", 10},
                                           {"f-dobj", 3}});
    const AliasSampler sampler = make_negative_sampler(vocab, 0.75);

    std::vector<double> expect(vocab.size());
    double z = 0;
    for (size_t i = 0; i < vocab.size(); ++i) {
        expect[i] = std::pow(static_cast<double>(vocab.counts[i]), 0.75);
        z += expect[i];
    }
    const long long n = 1000000;
    std::vector<long long> observed(vocab.size(), 0);
    Rng rng(12345);
    for (long long i = 0; i < n; ++i) observed[sampler.sample(rng)] += 1;
    for (size_t i = 0; i < vocab.size(); ++i) {
        const double p = expect[i] / z;
        const double mean = p * static_cast<double>(n);
        const double sigma = std::sqrt(static_cast<double>(n) * p * (1 - p));
        INFO("token " << vocab.tokens[i] << " observed " << observed[i] << " expected " << mean);
        CHECK(std::fabs(static_cast<double>(observed[i]) - mean) <= 3.0 * sigma);
    }
}

TEST_CASE("subsampling boundaries") {
    // With t = 1 nothing is dropped; for t -> 0 the drop probability of any
    // above-threshold token approaches 1. The drop table is internal, so the
    // boundary behavior is observed through training determinism: a t=1 run
    // must visit every token (same result as a manual no-drop run).
    const Vocabulary vocab = direct_vocab({{"x-pred", 1000000}, {"y-subj", 1}});
    const double total = static_cast<double>(vocab.total_count());
    const double f = 1000000.0 / total;
    CHECK(1.0 - std::sqrt(1.0 / f) <= 0.0);           // t = 1: keep
    CHECK(1.0 - std::sqrt(1e-12 / f) >= 1.0 - 1e-3);  // t -> 0: drop
}

TEST_CASE("planted co-occurrences produce closer embeddings than random pairs") {
    // Corpus with two disjoint themes: a-pred and b-dobj always co-occur
    // (inside theme-1 sentences), c-dobj never appears near a-pred. After
    // training, cos(a,b) > cos(a,c). The corpus construction is the oracle.
    std::vector<std::vector<std::string>> sentences;
    Rng mix(7);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> s1{"a-pred", "b-dobj"};
        std::vector<std::string> s2{"c-dobj", "d-pred"};
        for (int k = 0; k < 3; ++k) {
            s1.push_back("t" + std::to_string(mix.below(10)) + "-subj");
            s2.push_back("u" + std::to_string(mix.below(10)) + "-subj");
        }
        mix.shuffle(s1);
        mix.shuffle(s2);
        sentences.push_back(std::move(s1));
        sentences.push_back(std::move(s2));
    }
    corpus::VocabCounts counts;
    for (const auto& s : sentences)
        for (const auto& tok : s) counts.tokens[tok] += 1;
    const Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);

    std::vector<std::vector<int>> ids;
    for (const auto& s : sentences) ids.push_back(to_token_ids(s, vocab));

    SgnsParams params;
    params.dim = 24;
    params.window = 5;
    params.negatives = 5;
    params.subsample_t = 1.0;  // tiny corpus, keep everything
    params.epochs = 12;
    const SgnsResult result = train_sgns(ids, params, vocab, 99);

    const auto& t = result.table;
    const double ab = cosine(t.row(vocab.id("a-pred")), t.row(vocab.id("b-dobj")));
    const double ac = cosine(t.row(vocab.id("a-pred")), t.row(vocab.id("c-dobj")));
    INFO("cos(a,b)=" << ab << " cos(a,c)=" << ac);
    CHECK(ab > ac);
}

TEST_CASE("probe loss trends downward across epochs") {
    // Stationary corpus with enough token variety that sampled negatives are
    // mostly true negatives.
    std::vector<std::vector<std::string>> sentences;
    Rng mix(13);
    for (int i = 0; i < 800; ++i) {
        const int theme = static_cast<int>(mix.below(8));
        std::vector<std::string> s;
        s.push_back("verb" + std::to_string(theme) + "-pred");
        for (int k = 0; k < 4; ++k)
            s.push_back("n" + std::to_string(theme) + "_" + std::to_string(mix.below(5)) +
                        "-dobj");
        sentences.push_back(std::move(s));
    }
    corpus::VocabCounts counts;
    for (const auto& s : sentences)
        for (const auto& tok : s) counts.tokens[tok] += 1;
    const Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);
    std::vector<std::vector<int>> ids;
    for (const auto& s : sentences) ids.push_back(to_token_ids(s, vocab));

    SgnsParams params;
    params.dim = 16;
    params.window = 3;
    params.negatives = 4;
    params.subsample_t = 1.0;
    params.epochs = 8;
    const SgnsResult result = train_sgns(ids, params, vocab, 5);
    REQUIRE(result.probe_loss.size() == 8);

    // Linear fit slope over epochs must be negative; allow tiny upticks.
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    const int n = static_cast<int>(result.probe_loss.size());
    for (int i = 0; i < n; ++i) {
        sx += i;
        sy += result.probe_loss[static_cast<size_t>(i)];
        sxy += i * result.probe_loss[static_cast<size_t>(i)];
        sxx += static_cast<double>(i) * i;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    INFO("probe losses: " << result.probe_loss.front() << " .. " << result.probe_loss.back());
    CHECK(slope < 0.0);

    int upticks = 0;
    for (size_t i = 1; i < result.probe_loss.size(); ++i)
        if (result.probe_loss[i] > result.probe_loss[i - 1] * 1.02) ++upticks;
    CHECK(upticks <= (n * 2) / 100 + 1);
}

TEST_CASE("zero epochs returns the seeded random table unchanged") {
    const Vocabulary vocab = direct_vocab({{"a-pred", 10}, {"b-dobj", 10}});
    std::vector<std::vector<int>> ids{{vocab.id("a-pred"), vocab.id("b-dobj")}};
    SgnsParams params;
    params.dim = 8;
    params.epochs = 0;
    const SgnsResult a = train_sgns(ids, params, vocab, 42);
    const SgnsResult b = train_sgns(ids, params, vocab, 42);
    CHECK(a.table.input == b.table.input);
    // Output vectors start at zero.
    for (float v : a.table.output) CHECK(v == 0.0f);
}

TEST_CASE("single-worker training is bitwise deterministic") {
    std::vector<std::vector<std::string>> sentences;
    for (int i = 0; i < 50; ++i)
        sentences.push_back({"a-pred", "b-dobj", "c-subj", "d-pred", "e-dobj"});
    corpus::VocabCounts counts;
    for (const auto& s : sentences)
        for (const auto& tok : s) counts.tokens[tok] += 1;
    const Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);
    std::vector<std::vector<int>> ids;
    for (const auto& s : sentences) ids.push_back(to_token_ids(s, vocab));

    SgnsParams params;
    params.dim = 12;
    params.window = 2;
    params.negatives = 3;
    params.epochs = 3;
    params.subsample_t = 1e-3;
    const SgnsResult a = train_sgns(ids, params, vocab, 7);
    const SgnsResult b = train_sgns(ids, params, vocab, 7);
    REQUIRE(a.table.input.size() == b.table.input.size());
    CHECK(std::memcmp(a.table.input.data(), b.table.input.data(),
                      a.table.input.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.table.output.data(), b.table.output.data(),
                      a.table.output.size() * sizeof(float)) == 0);
}

TEST_CASE("train_sgns rejects empty streams") {
    const Vocabulary vocab = direct_vocab({{"a-pred", 1}});
    SgnsParams params;
    params.dim = 4;
    CHECK_THROWS_AS(train_sgns({}, params, vocab, 1), ContractError);
    // OOV-only sentences are skipped; a stream of only those is empty too.
    std::vector<std::vector<int>> oov_only{{vocab.oov_id, vocab.oov_id}};
    CHECK_THROWS_AS(train_sgns(oov_only, params, vocab, 1), ContractError);
}

TEST_CASE("eventword2vec_repr sums component vectors") {
    const auto s = testing::example_script();
    corpus::VocabCounts counts;
    counts.add(s);
    const Vocabulary vocab = corpus::build_vocabulary_from_counts(counts, 0, 10);

    EmbeddingTable table;
    table.dim = 4;
    table.vocab = vocab;
    table.input.resize(vocab.size() * 4);
    Rng rng(3);
    for (float& v : table.input) v = static_cast<float>(rng.real() - 0.5);

    // Verb-only event: representation equals the verb vector.
    corpus::Event only_verb;
    only_verb.verb = "expand";
    const auto repr = eventword2vec_repr(only_verb, s.entities, table);
    const auto row = table.row(vocab.id("expand-pred"));
    for (int i = 0; i < 4; ++i) CHECK(repr[static_cast<size_t>(i)] == row[i]);

    // Full event: sum of verb and argument vectors.
    const auto full = eventword2vec_repr(s.events[1], s.entities, table);
    const auto v = table.row(vocab.id("sell-pred"));
    const auto a1 = table.row(vocab.id("company-subj"));
    const auto a2 = table.row(vocab.id("energy-dobj"));
    const auto a3 = table.row(vocab.id("plant-prep_to"));
    for (int i = 0; i < 4; ++i)
        CHECK(full[static_cast<size_t>(i)] ==
              Catch::Approx(v[i] + a1[i] + a2[i] + a3[i]).margin(1e-6));

    // Identical events give identical representations.
    CHECK(eventword2vec_repr(s.events[1], s.entities, table) == full);
}

TEST_CASE("embedding files round-trip in both forms") {
    const Vocabulary vocab = direct_vocab({{"a-pred", 9}, {"b-dobj", 5}, {"c-subj", 2}});
    EmbeddingTable table;
    table.dim = 6;
    table.vocab = vocab;
    table.input.resize(vocab.size() * 6);
    Rng rng(11);
    for (float& v : table.input) v = static_cast<float>(rng.real() * 2 - 1);
    table.output.assign(table.input.size(), 0.0f);

    testing::TempDir dir("emb");
    write_embeddings_text(dir.file("e.txt"), table);
    write_embeddings_binary(dir.file("e.bin"), table);

    const EmbeddingTable from_text = read_embeddings(dir.file("e.txt"), &vocab);
    const EmbeddingTable from_bin = read_embeddings(dir.file("e.bin"), &vocab);
    REQUIRE(from_text.dim == 6);
    REQUIRE(from_bin.dim == 6);
    CHECK(from_text.input == table.input);  // %.9g round-trips float exactly
    CHECK(from_bin.input == table.input);
    CHECK(from_text.input == from_bin.input);

    // Truncated binary fails loudly.
    {
        std::ifstream in(dir.file("e.bin"), std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(dir.file("trunc.bin"), std::ios::binary);
        out.write(all.data(), static_cast<std::streamsize>(all.size() / 2));
    }
    CHECK_THROWS_AS(read_embeddings(dir.file("trunc.bin")), FormatError);
}
