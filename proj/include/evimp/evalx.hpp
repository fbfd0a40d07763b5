#pragma once

// Cloze-task evaluation harness: accuracy plus breakdowns by argument type,
// head-word POS class of the gold entity, and entity frequency bucket;
// ablation orchestration over salience masks; tabular and JSON reports.

#include <functional>
#include <map>

#include "evimp/inference.hpp"

namespace evimp::evalx {

using cloze::ClozeInstance;
using corpus::Script;
using inference::Prediction;

struct Bucket {
    long long n = 0;
    long long correct = 0;
    double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
};

struct EvalConfig {
    std::string model_tag = "model";
    std::vector<int> freq_bucket_edges = {2, 3, 4, 6, 9};  // upper bounds; last bucket open
    std::string config_echo;
};

struct EvalReport {
    std::string model_tag;
    long long n_instances = 0;
    long long n_correct = 0;
    double accuracy = 0;
    std::map<std::string, Bucket> by_position;   // subj / dobj / pobj
    std::map<std::string, Bucket> by_pos_class;  // noun / pronoun / other
    std::vector<std::pair<std::string, Bucket>> by_frequency;
    std::string config_echo;
};

// Bucket label for an entity's total mention count under the configured edges
// (defaults: 2, 3, 4, 5-6, 7-9, 10+).
inline std::string frequency_bucket(int total, const std::vector<int>& edges = {2, 3, 4, 6, 9}) {
    if (total < 2) throw ContractError("frequency_bucket: entities have at least 2 mentions");
    int lower = 2;
    for (int edge : edges) {
        if (total <= edge) {
            if (edge == lower) return std::to_string(edge);
            return std::to_string(lower) + "–" + std::to_string(edge);
        }
        lower = edge + 1;
    }
    return std::to_string(lower) + "+";
}

inline std::vector<std::string> frequency_bucket_labels(const std::vector<int>& edges) {
    std::vector<std::string> labels;
    int lower = 2;
    for (int edge : edges) {
        labels.push_back(edge == lower ? std::to_string(edge)
                                       : std::to_string(lower) + "–" + std::to_string(edge));
        lower = edge + 1;
    }
    labels.push_back(std::to_string(lower) + "+");
    return labels;
}

// Head-word POS class of an entity: pronoun when the chain is all-pronominal,
// noun when the representative mention is named or nominal.
inline std::string head_pos_class(const corpus::Entity& entity) {
    bool all_pronominal = true;
    for (const corpus::Mention& m : entity.mentions)
        if (m.kind != corpus::MentionKind::pronominal) all_pronominal = false;
    if (all_pronominal) return "pronoun";
    const std::string repr = corpus::representative_lemma(entity);
    for (const corpus::Mention& m : entity.mentions) {
        if (m.kind == corpus::MentionKind::pronominal) continue;
        if (lowercase(m.head_lemma) == repr)
            return m.kind == corpus::MentionKind::named || m.kind == corpus::MentionKind::nominal
                       ? "noun"
                       : "other";
    }
    return "other";
}

using Predictor = std::function<Prediction(const Script&, const ClozeInstance&)>;

inline EvalReport evaluate(const std::map<std::string, Script>& scripts,
                           const std::vector<ClozeInstance>& instances, const Predictor& predictor,
                           const EvalConfig& cfg = {}) {
    if (instances.empty()) throw ContractError("evaluate: zero instances");
    EvalReport report;
    report.model_tag = cfg.model_tag;
    report.config_echo = cfg.config_echo;

    std::map<std::string, Bucket> freq;
    for (const std::string& label : frequency_bucket_labels(cfg.freq_bucket_edges))
        freq[label];

    for (const ClozeInstance& inst : instances) {
        auto it = scripts.find(inst.doc_id);
        if (it == scripts.end())
            throw ReferenceError("evaluate: instance references unknown document " + inst.doc_id);
        const Script& script = it->second;
        const Prediction p = predictor(script, inst);

        report.n_instances += 1;
        report.n_correct += p.correct ? 1 : 0;
        Bucket& pos = report.by_position[corpus::to_string(inst.position)];
        pos.n += 1;
        pos.correct += p.correct ? 1 : 0;
        const corpus::Entity& gold = script.entities[inst.gold_entity];
        Bucket& cls = report.by_pos_class[head_pos_class(gold)];
        cls.n += 1;
        cls.correct += p.correct ? 1 : 0;
        Bucket& fb = freq[frequency_bucket(static_cast<int>(gold.mentions.size()),
                                           cfg.freq_bucket_edges)];
        fb.n += 1;
        fb.correct += p.correct ? 1 : 0;
    }
    report.accuracy = static_cast<double>(report.n_correct) / report.n_instances;
    for (const std::string& label : frequency_bucket_labels(cfg.freq_bucket_edges))
        report.by_frequency.emplace_back(label, freq[label]);
    return report;
}

// ---------------------------------------------------------------------------
// Report emission

inline void write_report_tsv(std::ostream& out, const EvalReport& r) {
    char acc[32];
    auto pct = [&](double v) {
        std::snprintf(acc, sizeof(acc), "%.2f", v * 100.0);
        return std::string(acc);
    };
    out << "# model\t" << r.model_tag << "\n";
    if (!r.config_echo.empty()) out << "# config\t" << r.config_echo << "\n";
    out << "overall\t" << r.n_correct << "/" << r.n_instances << "\t" << pct(r.accuracy) << "\n";
    for (const auto& [k, b] : r.by_position)
        out << "arg_type\t" << k << "\t" << b.correct << "/" << b.n << "\t" << pct(b.accuracy())
            << "\n";
    for (const auto& [k, b] : r.by_pos_class)
        out << "head_pos\t" << k << "\t" << b.correct << "/" << b.n << "\t" << pct(b.accuracy())
            << "\n";
    for (const auto& [k, b] : r.by_frequency)
        out << "entity_freq\t" << k << "\t" << b.correct << "/" << b.n << "\t" << pct(b.accuracy())
            << "\n";
}

inline nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["model"] = r.model_tag;
    j["n_instances"] = r.n_instances;
    j["n_correct"] = r.n_correct;
    j["accuracy"] = r.accuracy;
    if (!r.config_echo.empty()) j["config"] = r.config_echo;
    auto dump = [](const Bucket& b) {
        return nlohmann::json{{"n", b.n}, {"correct", b.correct}, {"accuracy", b.accuracy()}};
    };
    for (const auto& [k, b] : r.by_position) j["by_argument_type"][k] = dump(b);
    for (const auto& [k, b] : r.by_pos_class) j["by_head_pos"][k] = dump(b);
    nlohmann::json freq = nlohmann::json::array();
    for (const auto& [k, b] : r.by_frequency) {
        nlohmann::json row = dump(b);
        row["bucket"] = k;
        freq.push_back(row);
    }
    j["by_entity_frequency"] = freq;
    return j;
}

// Per-bucket CSV for external plotting; no graphics are rendered here.
inline void write_plot_data(const std::string& path, const EvalReport& r) {
    atomic_write(path, [&](std::ostream& out) {
        out << "dimension,bucket,n,correct,accuracy\n";
        auto row = [&](const std::string& dim, const std::string& k, const Bucket& b) {
            char acc[32];
            std::snprintf(acc, sizeof(acc), "%.6f", b.accuracy());
            out << dim << "," << k << "," << b.n << "," << b.correct << "," << acc << "\n";
        };
        for (const auto& [k, b] : r.by_position) row("arg_type", k, b);
        for (const auto& [k, b] : r.by_pos_class) row("head_pos", k, b);
        for (const auto& [k, b] : r.by_frequency) row("entity_freq", k, b);
    });
}

// ---------------------------------------------------------------------------
// Ablation orchestration: one model per salience mask, each trained and
// evaluated with the same data and seeds (Table-4-shaped output).

struct AblationRow {
    std::string mask_name;
    salience::SalienceMask mask;
    EvalReport report;
};

inline std::vector<std::pair<std::string, salience::SalienceMask>> ablation_masks(
    const std::vector<std::string>& groups) {
    std::vector<std::pair<std::string, salience::SalienceMask>> masks;
    masks.emplace_back("no entity salience feature", salience::SalienceMask::none());
    for (const std::string& g : groups)
        masks.emplace_back("- " + g, salience::SalienceMask::ablate(g));
    masks.emplace_back("all entity salience features", salience::SalienceMask::all());
    return masks;
}

inline std::vector<AblationRow> ablation_run(
    const std::vector<cloze::TripleRecord>& triples, const eventcomp::TrainParams& params,
    const embeddings::EmbeddingTable& init_embeddings, const eventcomp::EventCompHyperParams& hp,
    const std::map<std::string, Script>& eval_scripts,
    const std::vector<ClozeInstance>& eval_instances, inference::Aggregation agg,
    const std::vector<std::string>& groups = {"mentions", "head_count", "1st_loc"},
    const std::function<void(const std::string&)>& progress = nullptr) {
    std::vector<AblationRow> rows;
    for (const auto& [name, mask] : ablation_masks(groups)) {
        if (progress) progress("training ablation model: " + name);
        eventcomp::TrainResult trained =
            eventcomp::train(triples, params, init_embeddings, hp, mask, "eventcomp[" + mask.describe() + "]");
        EvalConfig cfg;
        cfg.model_tag = trained.model.tag;
        EvalReport report = evaluate(
            eval_scripts, eval_instances,
            [&](const Script& s, const ClozeInstance& i) {
                return inference::predict(s, i, trained.model, agg);
            },
            cfg);
        rows.push_back({name, mask, std::move(report)});
    }
    return rows;
}

inline void write_ablation_tsv(std::ostream& out, const std::vector<AblationRow>& rows) {
    out << "features\taccuracy\tcorrect\tn\n";
    for (const AblationRow& r : rows) {
        char acc[32];
        std::snprintf(acc, sizeof(acc), "%.2f", r.report.accuracy * 100.0);
        out << r.mask_name << "\t" << acc << "\t" << r.report.n_correct << "\t"
            << r.report.n_instances << "\n";
    }
}

}  // namespace evimp::evalx
