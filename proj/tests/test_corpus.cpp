#include <catch2/catch_amalgamated.hpp>

#include "evimp/corpus.hpp"
#include "helpers.hpp"

using namespace evimp;
using namespace evimp::corpus;

namespace {

RawArgument raw_arg(std::string lemma, int chain = -1, std::string prep = "", int dist = 0) {
    RawArgument a;
    a.lemma = std::move(lemma);
    a.chain = chain;
    a.prep = std::move(prep);
    a.dist = dist;
    return a;
}

}  // namespace

TEST_CASE("normalize_event handles passive constructions") {
    // (sell, passive, passive-subject unit(x3), by-object firm(x1))
    // -> (sell, subj x1, dobj x3, pobj empty)
    RawEventRecord raw;
    raw.verb_lemma = "sell";
    raw.passive = true;
    raw.subj = raw_arg("unit", 3);
    raw.preps.push_back(raw_arg("firm", 1, "by", 2));
    std::unordered_map<int, int> chains{{3, 3}, {1, 1}};
    const Event ev = normalize_event(raw, chains);
    CHECK(ev.verb == "sell");
    CHECK(ev.subj == Argument::entity_ref(1));
    CHECK(ev.dobj == Argument::entity_ref(3));
    CHECK(ev.pobj.is_empty());
}

TEST_CASE("normalize_event suffixes particles and prefixes negation") {
    RawEventRecord raw;
    raw.verb_lemma = "break";
    raw.particle = "out";
    raw.subj = raw_arg("", 0);
    std::unordered_map<int, int> chains{{0, 0}};
    const Event ev = normalize_event(raw, chains);
    CHECK(ev.verb == "break_out");
    CHECK(ev.subj == Argument::entity_ref(0));

    RawEventRecord neg;
    neg.verb_lemma = "Pick";
    neg.particle = "Up";
    neg.negated = true;
    const Event nev = normalize_event(neg, {});
    CHECK(nev.verb == "not_pick_up");
}

TEST_CASE("normalize_event keeps the prepositional object closest to the predicate") {
    RawEventRecord raw;
    raw.verb_lemma = "move";
    raw.preps.push_back(raw_arg("funds", -1, "to", 3));
    raw.preps.push_back(raw_arg("january", -1, "in", 7));
    const Event ev = normalize_event(raw, {});
    CHECK(ev.pobj == Argument::lemma_filler("funds", "to"));
}

TEST_CASE("normalize_event ditransitive passive keeps the overt direct object") {
    RawEventRecord raw;
    raw.verb_lemma = "give";
    raw.passive = true;
    raw.subj = raw_arg("john");
    raw.dobj = raw_arg("book");
    const Event ev = normalize_event(raw, {});
    CHECK(ev.dobj == Argument::lemma_filler("book"));
    CHECK(ev.subj == Argument::lemma_filler("john"));
}

TEST_CASE("parse_document promotes only chains of length >= 2") {
    RawDocumentRecord rec;
    rec.doc_id = "d1";
    rec.sentences_count = 3;
    rec.chains.push_back({{0, "company", MentionKind::nominal, -1},
                          {1, "it", MentionKind::pronominal, -1}});
    rec.chains.push_back({{2, "table", MentionKind::nominal, -1}});  // length 1, demoted
    RawEventRecord e;
    e.verb_lemma = "buy";
    e.subj = raw_arg("company", 0);
    e.dobj = raw_arg("table", 1);
    rec.events.push_back(e);

    const Script s = parse_document(rec);
    REQUIRE(s.entities.size() == 1);
    CHECK(s.events[0].subj == Argument::entity_ref(0));
    CHECK(s.events[0].dobj == Argument::lemma_filler("table"));
}

TEST_CASE("parse_document example document has five events and three entities") {
    // Document record shaped like the worked example: chains for the company,
    // the firm and the plant; electricity/energy stay lemma fillers.
    const std::string line = R"({"doc_id":"fig1","sentences_count":5,
      "entities":[
        [{"sent":0,"head_lemma":"company","kind":"nominal"},{"sent":1,"head_lemma":"it","kind":"pronominal"},{"sent":3,"head_lemma":"company","kind":"nominal"}],
        [{"sent":0,"head_lemma":"firm","kind":"nominal"},{"sent":2,"head_lemma":"firm","kind":"nominal"}],
        [{"sent":1,"head_lemma":"plant","kind":"nominal"},{"sent":2,"head_lemma":"plant","kind":"nominal"},{"sent":4,"head_lemma":"it","kind":"pronominal"}]],
      "events":[
        {"verb":"produce","subj":{"chain":0},"dobj":{"lemma":"electricity"}},
        {"verb":"sell","subj":{"chain":0},"dobj":{"lemma":"energy"},"preps":[{"lemma":"plant","chain":2,"prep":"to","dist":2}]},
        {"verb":"acquire","subj":{"chain":1},"dobj":{"chain":2}},
        {"verb":"operate","subj":{"chain":1},"dobj":{"chain":2}},
        {"verb":"expand","subj":{"chain":2}}]})";
    std::string squashed;
    for (char c : line)
        if (c != '\n') squashed += c;
    const Script s = parse_document_line(squashed, 1);
    REQUIRE(s.events.size() == 5);
    REQUIRE(s.entities.size() == 3);
    CHECK(s.events[0].dobj == Argument::lemma_filler("electricity"));
    CHECK(s.events[1].dobj == Argument::lemma_filler("energy"));
    CHECK(s.events[1].pobj == Argument::entity_ref(2, "to"));
}

TEST_CASE("parse_document rejects dangling chain ids and malformed records") {
    RawDocumentRecord rec;
    rec.doc_id = "bad";
    rec.chains.push_back({{0, "a", MentionKind::nominal, -1}, {1, "a", MentionKind::nominal, -1}});
    RawEventRecord e;
    e.verb_lemma = "see";
    e.subj = raw_arg("x", 7);
    rec.events.push_back(e);
    CHECK_THROWS_AS(parse_document(rec), ReferenceError);

    CHECK_THROWS_AS(parse_document_line("{not json", 3), FormatError);
    CHECK_THROWS_AS(parse_document_line(R"({"doc_id":"x","events":[{"verb":""}]})", 4),
                    FormatError);
}

TEST_CASE("parse_document keeps entities for an event-free record") {
    RawDocumentRecord rec;
    rec.doc_id = "empty";
    rec.chains.push_back({{0, "a", MentionKind::nominal, -1}, {1, "a", MentionKind::nominal, -1}});
    const Script s = parse_document(rec);
    CHECK(s.events.empty());
    CHECK(s.entities.size() == 1);
}

TEST_CASE("argument_token builds role-lemma pairs") {
    const auto s = testing::example_script();
    CHECK(argument_token(s.events[0].dobj, ArgPosition::dobj, s.entities) == "electricity-dobj");
    CHECK(argument_token(s.events[1].pobj, ArgPosition::pobj, s.entities) == "plant-prep_to");
    CHECK_THROWS_AS(argument_token(Argument::make_empty(), ArgPosition::subj, s.entities),
                    ContractError);

    // All-pronominal chain falls back to the first mention's lemma.
    const auto e = testing::make_entity(
        0, {{0, "it", MentionKind::pronominal}, {1, "it", MentionKind::pronominal}});
    CHECK(argument_token(Argument::entity_ref(0), ArgPosition::subj, {e}) == "it-subj");
}

TEST_CASE("representative lemma prefers frequent non-pronominal heads") {
    const auto e = testing::make_entity(0, {{0, "exchange", MentionKind::nominal},
                                            {1, "it", MentionKind::pronominal},
                                            {2, "market", MentionKind::nominal},
                                            {3, "market", MentionKind::nominal}});
    CHECK(corpus::representative_lemma(e) == "market");

    // Ties break toward the earliest mention.
    const auto tie = testing::make_entity(0, {{0, "Alpha", MentionKind::named},
                                              {1, "beta", MentionKind::nominal}});
    CHECK(corpus::representative_lemma(tie) == "alpha");
}

TEST_CASE("argument tokens always match the role pattern") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = testing::random_script(rng);
        for (const Event& ev : s.events)
            for (ArgPosition p : kAllPositions) {
                if (ev.arg(p).is_empty()) continue;
                const std::string tok = argument_token(ev.arg(p), p, s.entities);
                const size_t dash = tok.rfind('-');
                REQUIRE(dash != std::string::npos);
                REQUIRE(dash > 0);
                const std::string role = tok.substr(dash + 1);
                const bool ok = role == "subj" || role == "dobj" || starts_with(role, "prep");
                REQUIRE(ok);
            }
    }
}

TEST_CASE("build_vocabulary applies thresholds and deterministic ids") {
    VocabCounts counts;
    counts.tokens["run-pred"] = 501;
    counts.tokens["jog-pred"] = 12;
    counts.tokens["b-subj"] = 600;
    counts.tokens["a-subj"] = 600;
    counts.tokens["x-prep_to"] = 700;
    counts.tokens["y-prep_rare"] = 700;
    counts.preps["to"] = 700;
    counts.preps["rare"] = 1;  // below the top-k cut below

    const Vocabulary vocab = build_vocabulary_from_counts(counts, 500, 1);
    CHECK(vocab.id("run-pred") != vocab.oov_id);
    CHECK(vocab.id("jog-pred") == vocab.oov_id);
    CHECK(vocab.id("y-prep_rare") == vocab.oov_id);
    CHECK(vocab.id("x-prep_to") != vocab.oov_id);
    // Equal counts: lexicographically smaller token gets the smaller id.
    CHECK(vocab.id("a-subj") < vocab.id("b-subj"));
    // OOV count aggregates everything dropped.
    CHECK(vocab.counts[vocab.oov_id] == 12 + 700);
    CHECK(vocab.prepositions == std::vector<std::string>{"to"});
}

TEST_CASE("build_vocabulary on an empty stream yields only the sentinel") {
    const std::vector<Script> empty;
    const Vocabulary vocab = build_vocabulary(empty, 500, 50);
    REQUIRE(vocab.size() == 1);
    CHECK(vocab.tokens[0] == kOovToken);
    CHECK(vocab.id("anything") == vocab.oov_id);
}

TEST_CASE("vocabulary building is deterministic") {
    Rng rng(5);
    std::vector<Script> scripts;
    for (int i = 0; i < 60; ++i) scripts.push_back(testing::random_script(rng));
    const Vocabulary a = build_vocabulary(scripts, 2, 3);
    const Vocabulary b = build_vocabulary(scripts, 2, 3);
    CHECK(a.tokens == b.tokens);
    CHECK(a.counts == b.counts);
    CHECK(a.prepositions == b.prepositions);
    CHECK(a.content_hash() == b.content_hash());
}

TEST_CASE("downsample_keep_probability") {
    CHECK(downsample_keep_probability(100000, 100000) == 1.0);
    CHECK(downsample_keep_probability(400000, 100000) == Catch::Approx(0.25));
    CHECK(downsample_keep_probability(50, 100000) == 1.0);
}

TEST_CASE("corpus round-trip preserves scripts structurally") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const Script s = testing::random_script(rng);
        const Script back = parse_document_line(serialize_script(s), 1);
        REQUIRE(back == s);
    }
}

TEST_CASE("entity promotion matches the length rule on synthetic documents") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        RawDocumentRecord rec;
        rec.doc_id = "syn";
        rec.sentences_count = 4;
        const int n_chains = 1 + static_cast<int>(rng.below(6));
        int expected = 0;
        for (int c = 0; c < n_chains; ++c) {
            const int len = 1 + static_cast<int>(rng.below(4));
            if (len >= 2) ++expected;
            std::vector<Mention> chain;
            for (int m = 0; m < len; ++m)
                chain.push_back({static_cast<int>(rng.below(4)), "w", MentionKind::nominal, -1});
            rec.chains.push_back(std::move(chain));
        }
        CHECK(parse_document(rec).entities.size() == static_cast<size_t>(expected));
    }
}

TEST_CASE("vocabulary file round-trips") {
    VocabCounts counts;
    counts.tokens["walk-pred"] = 900;
    counts.tokens["dog-subj"] = 700;
    counts.tokens["park-prep_in"] = 650;
    counts.preps["in"] = 650;
    const Vocabulary vocab = build_vocabulary_from_counts(counts, 500, 2);

    testing::TempDir dir("vocab");
    write_vocabulary(dir.file("v.tsv"), vocab);
    const Vocabulary back = read_vocabulary(dir.file("v.tsv"));
    CHECK(back.tokens == vocab.tokens);
    CHECK(back.counts == vocab.counts);
    CHECK(back.prepositions == vocab.prepositions);
    CHECK(back.content_hash() == vocab.content_hash());
}
