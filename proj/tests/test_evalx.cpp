#include <catch2/catch_amalgamated.hpp>

#include "evimp/evalx.hpp"
#include "helpers.hpp"

using namespace evimp;
using namespace evimp::evalx;
using cloze::ClozeInstance;
using corpus::Script;

namespace {

std::pair<std::map<std::string, Script>, std::vector<ClozeInstance>> random_eval_set(
    Rng& rng, int docs) {
    std::map<std::string, Script> scripts;
    std::vector<ClozeInstance> instances;
    int made = 0;
    while (made < docs) {
        Script s = testing::random_script(rng, 3, 3);
        s.doc_id = "doc-" + std::to_string(made);
        Rng gen(static_cast<uint64_t>(made));
        auto insts = cloze::generate_cloze_instances(s, gen, 4);
        if (insts.empty()) continue;
        for (auto& inst : insts) {
            inst.doc_id = s.doc_id;
            instances.push_back(inst);
        }
        scripts.emplace(s.doc_id, std::move(s));
        ++made;
    }
    return {scripts, instances};
}

}  // namespace

TEST_CASE("frequency buckets use the declared boundaries") {
    CHECK(frequency_bucket(2) == "2");
    CHECK(frequency_bucket(3) == "3");
    CHECK(frequency_bucket(4) == "4");
    CHECK(frequency_bucket(5) == "5–6");
    CHECK(frequency_bucket(6) == "5–6");
    CHECK(frequency_bucket(7) == "7–9");
    CHECK(frequency_bucket(9) == "7–9");
    CHECK(frequency_bucket(10) == "10+");
    CHECK(frequency_bucket(37) == "10+");
    CHECK_THROWS_AS(frequency_bucket(1), ContractError);

    const auto labels = frequency_bucket_labels({2, 3, 4, 6, 9});
    CHECK(labels == std::vector<std::string>{"2", "3", "4", "5–6", "7–9", "10+"});
}

TEST_CASE("head POS classes") {
    using corpus::MentionKind;
    const auto noun = testing::make_entity(0, {{0, "ship", MentionKind::nominal},
                                               {1, "it", MentionKind::pronominal}});
    CHECK(head_pos_class(noun) == "noun");
    const auto named = testing::make_entity(0, {{0, "Alice", MentionKind::named},
                                                {1, "Alice", MentionKind::named}});
    CHECK(head_pos_class(named) == "noun");
    const auto pron = testing::make_entity(0, {{0, "it", MentionKind::pronominal},
                                               {1, "they", MentionKind::pronominal}});
    CHECK(head_pos_class(pron) == "pronoun");
}

TEST_CASE("evaluate computes accuracy and recombining breakdowns") {
    Rng rng(31);
    auto [scripts, instances] = random_eval_set(rng, 40);

    Rng pick(7);
    const EvalReport report = evaluate(
        scripts, instances,
        [&](const Script&, const ClozeInstance& inst) {
            return inference::baseline_random(inst, pick);
        });

    CHECK(report.n_instances == static_cast<long long>(instances.size()));
    CHECK(report.accuracy ==
          Catch::Approx(static_cast<double>(report.n_correct) / report.n_instances));

    long long n_sum = 0, c_sum = 0;
    for (const auto& [k, b] : report.by_position) {
        n_sum += b.n;
        c_sum += b.correct;
    }
    CHECK(n_sum == report.n_instances);
    CHECK(c_sum == report.n_correct);

    n_sum = c_sum = 0;
    for (const auto& [k, b] : report.by_pos_class) {
        n_sum += b.n;
        c_sum += b.correct;
    }
    CHECK(n_sum == report.n_instances);
    CHECK(c_sum == report.n_correct);

    n_sum = c_sum = 0;
    for (const auto& [k, b] : report.by_frequency) {
        n_sum += b.n;
        c_sum += b.correct;
    }
    CHECK(n_sum == report.n_instances);
    CHECK(c_sum == report.n_correct);

    CHECK_THROWS_AS(evaluate(scripts, {},
                             [&](const Script&, const ClozeInstance& inst) {
                                 return inference::baseline_random(inst, pick);
                             }),
                    ContractError);
}

TEST_CASE("random baseline accuracy matches the analytic mean within 3 sigma") {
    Rng rng(37);
    auto [scripts, instances] = random_eval_set(rng, 150);

    double mean = 0, var = 0;
    for (const auto& inst : instances) {
        const double p = 1.0 / static_cast<double>(inst.candidates.size());
        mean += p;
        var += p * (1 - p);
    }
    const double n = static_cast<double>(instances.size());
    mean /= n;
    const double sigma = std::sqrt(var) / n;

    Rng pick(11);
    const EvalReport report = evaluate(scripts, instances,
                                       [&](const Script&, const ClozeInstance& inst) {
                                           return inference::baseline_random(inst, pick);
                                       });
    INFO("accuracy " << report.accuracy << " analytic " << mean << " sigma " << sigma);
    CHECK(std::fabs(report.accuracy - mean) <= 3.0 * sigma);
}

TEST_CASE("report determinism under a fixed seed") {
    Rng rng(41);
    auto [scripts, instances] = random_eval_set(rng, 30);
    auto run = [&](uint64_t seed) {
        Rng pick(seed);
        EvalConfig cfg;
        cfg.model_tag = "random";
        const EvalReport r = evaluate(scripts, instances,
                                      [&](const Script&, const ClozeInstance& inst) {
                                          return inference::baseline_random(inst, pick);
                                      },
                                      cfg);
        std::ostringstream out;
        write_report_tsv(out, r);
        return out.str();
    };
    CHECK(run(5) == run(5));
    CHECK(report_json(EvalReport{}).contains("accuracy"));
}

TEST_CASE("plot data CSV recombines") {
    Rng rng(43);
    auto [scripts, instances] = random_eval_set(rng, 20);
    Rng pick(3);
    const EvalReport report = evaluate(scripts, instances,
                                       [&](const Script&, const ClozeInstance& inst) {
                                           return inference::baseline_random(inst, pick);
                                       });
    testing::TempDir dir("plot");
    write_plot_data(dir.file("plot.csv"), report);
    std::ifstream in(dir.file("plot.csv"));
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "dimension,bucket,n,correct,accuracy");
    long long rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<long long>(report.by_position.size() +
                                         report.by_pos_class.size() +
                                         report.by_frequency.size()));
}

TEST_CASE("ablation masks give a Table-4-shaped five-row report") {
    const auto masks = ablation_masks({"mentions", "head_count", "1st_loc"});
    REQUIRE(masks.size() == 5);
    CHECK(masks.front().first == "no entity salience feature");
    CHECK(masks.back().first == "all entity salience features");
    CHECK(masks[1].second.extra_width() == 5);
    CHECK(masks[2].second.extra_width() == 8);
    CHECK(masks[3].second.extra_width() == 8);
}
