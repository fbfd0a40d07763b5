// evimp: implicit-argument prediction pipeline front end.
//
// Subcommands cover the whole pipeline: corpus ingestion, vocabulary
// building, embedding-sentence emission, SGNS training, triple/cloze
// generation, event-composition training, prediction, evaluation, salience
// ablations, the nominal-predicate (G&C-style) path, gradient verification
// and synthetic toy-world corpora.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure. All randomness is controlled by --seed; outputs are written
// atomically (temp file + rename).

#include <atomic>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "evimp/cloze.hpp"
#include "evimp/corpus.hpp"
#include "evimp/embeddings.hpp"
#include "evimp/evalx.hpp"
#include "evimp/eventcomp.hpp"
#include "evimp/gc.hpp"
#include "evimp/inference.hpp"
#include "evimp/salience.hpp"
#include "evimp/toyworld.hpp"

using namespace evimp;

namespace {

constexpr const char* kSentencesHeader = "#evimp-sentences v1";

void progress(const std::string& msg) { std::cerr << "[evimp] " << msg << "\n"; }

// Effective configuration of a subcommand as a single line, echoed into
// reports and checkpoint manifests.
std::string echo_config(const CLI::App& cmd) {
    std::string flat;
    for (char c : cmd.config_to_str(true, false)) flat += c == '\n' ? ' ' : c;
    while (!flat.empty() && flat.back() == ' ') flat.pop_back();
    return flat;
}

template <class Fn>
void parallel_for(size_t n, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (size_t i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    for (auto& t : threads) t.join();
}

std::vector<std::string> read_raw_lines(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(std::move(line));
    return lines;
}

std::map<std::string, corpus::Script> load_script_map(const std::string& path) {
    std::map<std::string, corpus::Script> scripts;
    corpus::for_each_script(path, [&](corpus::Script s) {
        std::string id = s.doc_id;
        scripts.emplace(std::move(id), std::move(s));
    });
    return scripts;
}

std::vector<std::vector<int>> load_sentence_ids(const std::string& path,
                                                const corpus::Vocabulary& vocab) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, kSentencesHeader))
        throw FormatError("sentence file " + path + ": missing header");
    std::vector<std::vector<int>> sentences;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> ids;
        for (const std::string& tok : split(line, ' '))
            if (!tok.empty()) ids.push_back(vocab.id(tok));
        if (!ids.empty()) sentences.push_back(std::move(ids));
    }
    return sentences;
}

// ---------------------------------------------------------------------------
// Shared option blocks

struct TrainModelOptions {
    double lr = 0.01;
    int batch = 100;
    int epochs = 20;
    double l2 = 0.01;
    uint64_t seed = 42;
    std::string ablate;
    bool raw_salience = false;
    bool freeze_embeddings = false;
    std::string activation = "tanh";
    int arg_hidden = 600;
    int event_repr = 300;
    int pair_hidden1 = 400;
    int pair_hidden2 = 200;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", lr, "SGD learning rate")->capture_default_str();
        cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--l2", l2, "L2 regularization on network weights")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
        cmd->add_option("--ablate-salience", ablate,
                        "Comma list of salience groups to remove "
                        "(mentions,head_count,1st_loc or 'all')");
        cmd->add_flag("--raw-salience", raw_salience,
                      "Feed raw salience counts instead of the bounded encoding");
        cmd->add_flag("--freeze-embeddings", freeze_embeddings,
                      "Do not fine-tune embeddings during training");
        cmd->add_option("--activation", activation, "Hidden nonlinearity (tanh|relu)")
            ->capture_default_str();
        cmd->add_option("--arg-hidden", arg_hidden, "Argument composition hidden width")
            ->capture_default_str();
        cmd->add_option("--event-repr", event_repr, "Event representation width")
            ->capture_default_str();
        cmd->add_option("--pair-hidden1", pair_hidden1, "Pair composition first width")
            ->capture_default_str();
        cmd->add_option("--pair-hidden2", pair_hidden2, "Pair composition second width")
            ->capture_default_str();
    }

    eventcomp::EventCompHyperParams hyperparams(int dim) const {
        eventcomp::EventCompHyperParams hp;
        hp.dim = dim;
        hp.arg_hidden = arg_hidden;
        hp.event_repr = event_repr;
        hp.pair_hidden1 = pair_hidden1;
        hp.pair_hidden2 = pair_hidden2;
        hp.activation = eventcomp::activation_from(activation);
        hp.raw_salience = raw_salience;
        return hp;
    }

    eventcomp::TrainParams train_params() const {
        eventcomp::TrainParams p;
        p.lr = lr;
        p.batch_size = batch;
        p.epochs = epochs;
        p.l2 = l2;
        p.seed = seed;
        p.freeze_embeddings = freeze_embeddings;
        return p;
    }
};

// ---------------------------------------------------------------------------
// Subcommand bodies. Each throws on failure; main maps exceptions to codes.

void run_ingest(const std::string& input, const std::string& output, int workers) {
    const std::vector<std::string> lines = read_raw_lines(input);
    std::vector<std::optional<corpus::Script>> parsed(lines.size());
    std::atomic<size_t> done{0};
    parallel_for(lines.size(), workers, [&](size_t i) {
        if (lines[i].empty() || lines[i][0] == '#') return;
        parsed[i] = corpus::parse_document_line(lines[i], i + 1);
        const size_t d = done.fetch_add(1) + 1;
        if (d % 5000 == 0) progress("parsed " + std::to_string(d) + " documents");
    });
    atomic_write(output, [&](std::ostream& out) {
        out << corpus::kCorpusHeader << "\n";
        for (const auto& s : parsed)
            if (s) out << corpus::serialize_script(*s) << "\n";
    });
    progress("wrote " + std::to_string(done.load()) + " documents to " + output);
}

void run_vocab(const std::string& corpus_path, const std::string& output, long long threshold,
               size_t prep_top_k, int workers) {
    std::vector<corpus::Script> scripts = corpus::read_corpus(corpus_path);
    std::vector<corpus::VocabCounts> partial(static_cast<size_t>(std::max(1, workers)));
    parallel_for(scripts.size(), workers, [&](size_t i) {
        partial[i % partial.size()].add(scripts[i]);
    });
    corpus::VocabCounts counts;
    for (const auto& p : partial) counts.merge(p);
    const corpus::Vocabulary vocab =
        corpus::build_vocabulary_from_counts(counts, threshold, prep_top_k);
    corpus::write_vocabulary(output, vocab);
    progress("vocabulary of " + std::to_string(vocab.size()) + " tokens (" +
             std::to_string(vocab.prepositions.size()) + " prepositions) -> " + output);
}

void run_sentences(const std::string& corpus_path, const std::string& vocab_path,
                   const std::string& output, long long downsample_threshold, uint64_t seed) {
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    atomic_write(output, [&](std::ostream& out) {
        out << kSentencesHeader << "\n";
        corpus::for_each_script(corpus_path, [&](const corpus::Script& s) {
            Rng rng(derive_seed(seed, s.doc_id));
            std::vector<std::string> sentence;
            for (const corpus::Event& ev : s.events) {
                const double keep = corpus::downsample_keep_probability(
                    vocab.count_of(corpus::verb_token(ev)), downsample_threshold);
                if (keep < 1.0 && !rng.bernoulli(keep)) continue;
                auto tokens = corpus::event_tokens(ev, s.entities);
                sentence.insert(sentence.end(), tokens.begin(), tokens.end());
            }
            if (sentence.empty()) return;
            for (size_t i = 0; i < sentence.size(); ++i) {
                if (i) out << " ";
                out << sentence[i];
            }
            out << "\n";
        });
    });
    progress("wrote pseudo-sentences to " + output);
}

void run_train_embeddings(const std::string& sentences_path, const std::string& vocab_path,
                          const std::string& output, const std::string& binary_output,
                          embeddings::SgnsParams params, uint64_t seed) {
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    const auto sentences = load_sentence_ids(sentences_path, vocab);
    progress("training SGNS on " + std::to_string(sentences.size()) + " sentences");
    const embeddings::SgnsResult result = embeddings::train_sgns(sentences, params, vocab, seed);
    for (size_t e = 0; e < result.probe_loss.size(); ++e)
        progress("epoch " + std::to_string(e + 1) + " probe loss " +
                 format_double(result.probe_loss[e]));
    if (!output.empty()) embeddings::write_embeddings_text(output, result.table);
    if (!binary_output.empty()) embeddings::write_embeddings_binary(binary_output, result.table);
    progress("embeddings written");
}

void run_gen_triples(const std::string& corpus_path, const std::string& vocab_path,
                     const std::string& output, uint64_t seed,
                     const cloze::TripleGenConfig& cfg) {
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    std::vector<cloze::TripleRecord> records;
    long long docs = 0;
    corpus::for_each_script(corpus_path, [&](const corpus::Script& s) {
        Rng rng(derive_seed(seed, s.doc_id));
        for (const auto& t : cloze::generate_triples(s, rng, cfg, &vocab))
            records.push_back(cloze::encode_triple(s, t, vocab));
        if (++docs % 5000 == 0) progress("processed " + std::to_string(docs) + " documents");
    });
    cloze::write_triple_records(output, records);
    progress(std::to_string(records.size()) + " triples -> " + output);
}

void run_gen_cloze(const std::string& corpus_path, const std::string& output, uint64_t seed,
                   size_t per_doc_cap) {
    std::vector<cloze::ClozeInstance> instances;
    corpus::for_each_script(corpus_path, [&](const corpus::Script& s) {
        Rng rng(derive_seed(seed, s.doc_id));
        for (auto& inst : cloze::generate_cloze_instances(s, rng, per_doc_cap))
            instances.push_back(std::move(inst));
    });
    cloze::write_cloze_instances(output, instances);
    progress(std::to_string(instances.size()) + " cloze instances -> " + output);
}

void run_train_model(const std::string& triples_path, const std::string& vocab_path,
                     const std::string& embeddings_path, const std::string& output,
                     bool binary_form, const TrainModelOptions& opt, const std::string& tag,
                     const std::string& config_echo) {
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    const embeddings::EmbeddingTable init = embeddings::read_embeddings(embeddings_path, &vocab);
    const auto records = cloze::read_triple_records(triples_path);
    progress("training on " + std::to_string(records.size()) + " triples, dim " +
             std::to_string(init.dim));
    const salience::SalienceMask mask = salience::SalienceMask::ablate(opt.ablate);
    const eventcomp::TrainResult result = eventcomp::train(
        records, opt.train_params(), init, opt.hyperparams(init.dim), mask, tag);
    for (size_t e = 0; e < result.epoch_data_loss.size(); ++e)
        progress("epoch " + std::to_string(e + 1) + " loss " +
                 format_double(result.epoch_data_loss[e]) + " (+reg " +
                 format_double(result.epoch_total_loss[e] - result.epoch_data_loss[e]) + ")");
    if (binary_form)
        eventcomp::save_checkpoint_binary(output, result.model, config_echo);
    else
        eventcomp::save_checkpoint_text(output, result.model, config_echo);
    progress("checkpoint -> " + output);
}

struct PredictorBundle {
    std::string tag;
    evalx::Predictor fn;
};

PredictorBundle make_predictor(const std::string& model_arg, const std::string& vocab_path,
                               const std::string& embeddings_path, inference::Aggregation agg,
                               uint64_t seed, bool force) {
    if (model_arg == "random") {
        auto rng = std::make_shared<Rng>(seed);
        return {"random", [rng](const corpus::Script&, const cloze::ClozeInstance& inst) {
                    return inference::baseline_random(inst, *rng);
                }};
    }
    if (model_arg == "mostfreq") {
        return {"mostfreq", [](const corpus::Script& s, const cloze::ClozeInstance& inst) {
                    return inference::baseline_mostfreq(s, inst);
                }};
    }
    if (model_arg == "eventword2vec") {
        if (embeddings_path.empty()) throw ContractError("eventword2vec needs --embeddings");
        std::shared_ptr<embeddings::EmbeddingTable> table;
        if (!vocab_path.empty()) {
            const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
            table = std::make_shared<embeddings::EmbeddingTable>(
                embeddings::read_embeddings(embeddings_path, &vocab));
        } else {
            table = std::make_shared<embeddings::EmbeddingTable>(
                embeddings::read_embeddings(embeddings_path));
        }
        return {"eventword2vec",
                [table, agg](const corpus::Script& s, const cloze::ClozeInstance& inst) {
                    return inference::baseline_eventword2vec(s, inst, *table, agg);
                }};
    }
    if (vocab_path.empty()) throw ContractError("a checkpoint model needs --vocab");
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    auto model = std::make_shared<eventcomp::EventCompModel>(
        eventcomp::load_checkpoint(model_arg, vocab, force));
    return {model->tag, [model, agg](const corpus::Script& s, const cloze::ClozeInstance& inst) {
                return inference::predict(s, inst, *model, agg);
            }};
}

void run_predict(const std::string& corpus_path, const std::string& cloze_path,
                 const std::string& model_arg, const std::string& vocab_path,
                 const std::string& embeddings_path, const std::string& output,
                 inference::Aggregation agg, uint64_t seed, int workers, bool force,
                 const std::string& tag_override) {
    const auto scripts = load_script_map(corpus_path);
    const auto instances = cloze::read_cloze_instances(cloze_path);
    PredictorBundle bundle =
        make_predictor(model_arg, vocab_path, embeddings_path, agg, seed, force);
    if (!tag_override.empty()) bundle.tag = tag_override;

    std::vector<inference::Prediction> preds(instances.size());
    // The random baseline owns a sequential rng; keep it single-threaded.
    const int effective_workers = model_arg == "random" ? 1 : workers;
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;
    parallel_for(instances.size(), effective_workers, [&](size_t i) {
        if (failed.load()) return;
        try {
            auto it = scripts.find(instances[i].doc_id);
            if (it == scripts.end())
                throw ReferenceError("instance references unknown document " +
                                     instances[i].doc_id);
            preds[i] = bundle.fn(it->second, instances[i]);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failed = true;
            failure = e.what();
        }
    });
    if (failed) throw FormatError(failure);
    inference::write_predictions(output, preds, bundle.tag);
    long long correct = 0;
    for (const auto& p : preds) correct += p.correct ? 1 : 0;
    char acc[32];
    std::snprintf(acc, sizeof(acc), "%.4f",
                  static_cast<double>(correct) / std::max<size_t>(1, preds.size()));
    progress("accuracy " + std::string(acc) + " -> " + output);
}

void run_evaluate(const std::string& corpus_path, const std::string& cloze_path,
                  const std::string& model_arg, const std::string& vocab_path,
                  const std::string& embeddings_path, const std::string& output,
                  const std::string& json_output, const std::string& plot_output,
                  inference::Aggregation agg, uint64_t seed, bool force,
                  const std::string& tag_override, const std::string& freq_buckets,
                  const std::string& config_echo) {
    const auto scripts = load_script_map(corpus_path);
    const auto instances = cloze::read_cloze_instances(cloze_path);
    PredictorBundle bundle =
        make_predictor(model_arg, vocab_path, embeddings_path, agg, seed, force);

    evalx::EvalConfig cfg;
    cfg.model_tag = tag_override.empty() ? bundle.tag : tag_override;
    cfg.config_echo = config_echo;
    if (!freq_buckets.empty()) {
        cfg.freq_bucket_edges.clear();
        for (const std::string& e : split(freq_buckets, ','))
            if (!e.empty()) cfg.freq_bucket_edges.push_back(std::stoi(e));
    }
    const evalx::EvalReport report = evalx::evaluate(scripts, instances, bundle.fn, cfg);

    if (output.empty()) {
        evalx::write_report_tsv(std::cout, report);
    } else {
        atomic_write(output, [&](std::ostream& out) { evalx::write_report_tsv(out, report); });
        progress("report -> " + output);
    }
    if (!json_output.empty())
        atomic_write(json_output,
                     [&](std::ostream& out) { out << evalx::report_json(report).dump(2) << "\n"; });
    if (!plot_output.empty()) evalx::write_plot_data(plot_output, report);
}

void run_ablate(const std::string& triples_path, const std::string& vocab_path,
                const std::string& embeddings_path, const std::string& corpus_path,
                const std::string& cloze_path, const std::string& groups,
                const TrainModelOptions& opt, inference::Aggregation agg,
                const std::string& output) {
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    const embeddings::EmbeddingTable init = embeddings::read_embeddings(embeddings_path, &vocab);
    const auto records = cloze::read_triple_records(triples_path);
    const auto scripts = load_script_map(corpus_path);
    const auto instances = cloze::read_cloze_instances(cloze_path);

    std::vector<std::string> group_list;
    for (const std::string& g : split(groups, ','))
        if (!g.empty()) group_list.push_back(g);

    const auto rows = evalx::ablation_run(records, opt.train_params(), init,
                                          opt.hyperparams(init.dim), scripts, instances, agg,
                                          group_list, progress);
    if (output.empty()) {
        evalx::write_ablation_tsv(std::cout, rows);
    } else {
        atomic_write(output, [&](std::ostream& out) { evalx::write_ablation_tsv(out, rows); });
        progress("ablation table -> " + output);
    }
}

gc::MappingTable load_mapping_table(const std::string& mappings_path) {
    return mappings_path.empty() ? gc::builtin_mappings() : gc::load_mappings(mappings_path);
}

void run_gc_convert(const std::string& input, const std::string& mappings_path,
                    const std::string& output) {
    const gc::MappingTable mappings = load_mapping_table(mappings_path);
    const auto instances = gc::read_gc_instances(input, mappings);
    atomic_write(output, [&](std::ostream& out) {
        out << "#evimp-gc-converted v1\n";
        for (const auto& inst : instances) {
            nlohmann::json j;
            j["doc_id"] = inst.doc_id;
            j["nominal"] = inst.nominal;
            j["verbal"] = inst.verbal;
            nlohmann::json open = nlohmann::json::array();
            for (const auto& role : inst.open)
                open.push_back({{"role", role.role}, {"position", role.position.role_name()}});
            j["open"] = open;
            nlohmann::json gold;
            for (const auto& [role, ids] : inst.gold)
                gold[role] = std::vector<int>(ids.begin(), ids.end());
            j["gold"] = gold;
            nlohmann::json cands = nlohmann::json::array();
            for (const auto& c : inst.candidates)
                cands.push_back({{"id", c.id},
                                 {"lemma", c.lemma},
                                 {"entity", c.entity},
                                 {"mentions", c.sal.total}});
            j["candidates"] = cands;
            if (!inst.warnings.empty()) j["warnings"] = inst.warnings;
            out << j.dump() << "\n";
        }
    });
    progress(std::to_string(instances.size()) + " converted instances -> " + output);
}

std::vector<gc::FnfExample> fnf_examples(const std::vector<gc::GCInstance>& instances) {
    std::vector<gc::FnfExample> examples;
    for (const auto& inst : instances)
        for (const auto& role : inst.open) {
            gc::FnfExample ex;
            ex.features = gc::extract_fillnofill_features(inst, role.n);
            auto g = inst.gold.find(role.role);
            ex.filled = g != inst.gold.end() && !g->second.empty();
            examples.push_back(std::move(ex));
        }
    return examples;
}

void run_gc_train_fnf(const std::string& input, const std::string& mappings_path,
                      const std::string& output, double l2, int epochs, double lr,
                      uint64_t seed) {
    const auto instances = gc::read_gc_instances(input, load_mapping_table(mappings_path));
    const auto examples = fnf_examples(instances);
    progress("training fill/no-fill on " + std::to_string(examples.size()) + " role decisions");
    const gc::FillNoFillModel model = gc::train_fillnofill(examples, l2, epochs, lr, seed);
    gc::write_fillnofill(output, model);
    progress("fill/no-fill model (" + std::to_string(model.feature_names.size()) +
             " features) -> " + output);
}

void run_gc_evaluate(const std::string& input, const std::string& mappings_path,
                     const std::string& model_path, const std::string& vocab_path,
                     const std::string& fnf_path, bool fnf_cv, bool oracle_fill,
                     inference::Aggregation agg, bool exclusive, const std::string& output,
                     double l2, int epochs, double lr, uint64_t seed, bool force) {
    const auto instances = gc::read_gc_instances(input, load_mapping_table(mappings_path));
    const corpus::Vocabulary vocab = corpus::read_vocabulary(vocab_path);
    const eventcomp::EventCompModel model = eventcomp::load_checkpoint(model_path, vocab, force);

    std::string protocol;
    std::map<std::string, gc::FillNoFillModel> per_fold;
    std::optional<gc::FillNoFillModel> fixed;
    if (oracle_fill) {
        protocol = "oracle (always fill)";
    } else if (fnf_cv) {
        protocol = "leave-one-predicate-out cross-validation (l2=" + format_double(l2) +
                   " epochs=" + std::to_string(epochs) + " lr=" + format_double(lr) + ")";
        std::set<std::string> nominals;
        for (const auto& inst : instances) nominals.insert(inst.nominal);
        for (const std::string& fold : nominals) {
            std::vector<gc::GCInstance> rest;
            for (const auto& inst : instances)
                if (inst.nominal != fold) rest.push_back(inst);
            const auto examples = fnf_examples(rest);
            bool pos = false, neg = false;
            for (const auto& ex : examples) (ex.filled ? pos : neg) = true;
            if (!pos || !neg) {
                // Degenerate fold: constant classifier at the majority class.
                gc::FillNoFillModel constant;
                constant.bias = pos ? 4.0 : -4.0;
                per_fold.emplace(fold, std::move(constant));
                protocol += "; fold '" + fold + "' single-class, constant classifier";
                continue;
            }
            per_fold.emplace(fold, gc::train_fillnofill(examples, l2, epochs, lr, seed));
        }
    } else if (!fnf_path.empty()) {
        protocol = "fixed classifier from " + fnf_path;
        fixed = gc::read_fillnofill(fnf_path);
    } else {
        throw ContractError("gc-evaluate needs one of --fnf, --fnf-cv, --oracle-fill");
    }

    gc::PrfAccumulator acc;
    for (const auto& inst : instances) {
        const gc::FillNoFillModel* fnf = nullptr;
        if (fixed)
            fnf = &*fixed;
        else if (!oracle_fill)
            fnf = &per_fold.at(inst.nominal);
        acc.add(inst, gc::multi_arg_predict(inst, model, fnf, agg, exclusive));
    }
    acc.finalize();

    if (output.empty()) {
        gc::write_gc_report(std::cout, acc, protocol);
    } else {
        atomic_write(output, [&](std::ostream& out) { gc::write_gc_report(out, acc, protocol); });
        progress("report -> " + output);
    }
}

int run_gradient_check(int models, int batch_size, double step, double tolerance, uint64_t seed,
                       int dim) {
    eventcomp::EventCompHyperParams hp;
    hp.dim = dim;
    hp.arg_hidden = 2 * dim;
    hp.event_repr = dim;
    hp.pair_hidden1 = dim + 4;
    hp.pair_hidden2 = dim;
    const int vocab_size = 16;

    bool all_pass = true;
    for (int m = 0; m < models; ++m) {
        eventcomp::EventCompModelT<double> model;
        model.hp = hp;
        model.mask = salience::SalienceMask::all();
        model.build(vocab_size);
        Rng rng(seed + static_cast<uint64_t>(m));
        model.init_weights(rng);
        for (double& w : model.embeddings.a) w = (rng.real() - 0.5) * 0.5;

        std::vector<eventcomp::TrainingExample<double>> batch;
        for (int b = 0; b < batch_size; ++b) {
            cloze::TripleRecord r;
            auto tok = [&] { return static_cast<int>(rng.below(vocab_size)); };
            auto slot = [&] { return rng.bernoulli(0.25) ? -1 : tok(); };
            r.context = {tok(), slot(), slot(), slot()};
            r.positive = {tok(), slot(), slot(), slot()};
            r.negative = r.positive;
            r.position = static_cast<int>(rng.below(3));
            r.negative[static_cast<size_t>(r.position) + 1] = tok();
            r.neg_position = r.position;
            r.pos_sal.first_loc = static_cast<int>(rng.below(6));
            r.pos_sal.head_count = 2;
            r.pos_sal.named = 1;
            r.pos_sal.nominal = 1;
            r.pos_sal.pronominal = 1;
            r.pos_sal.total = 3;
            r.neg_sal = r.pos_sal;
            r.neg_sal.first_loc = static_cast<int>(rng.below(6));
            batch.push_back(eventcomp::decode_example<double>(r, model.mask, false));
        }

        const auto report = eventcomp::gradient_check(model, batch, 0.01, step, tolerance);
        std::cout << "model " << m << ": params=" << report.checked
                  << " max_rel_err=" << format_double(report.max_rel_err)
                  << " worst=" << report.worst_param << " => "
                  << (report.pass ? "PASS" : "FAIL") << "\n";
        if (!report.pass) all_pass = false;
    }
    if (!all_pass) {
        std::cerr << "evimp: gradient check failed\n";
        return 3;
    }
    return 0;
}

void run_toy_world(const std::string& kind, const std::string& out_dir, int scripts,
                   int eval_scripts, uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    toyworld::ToyWorldParams train_params;
    train_params.scripts = scripts;
    train_params.seed = seed;
    toyworld::ToyWorldParams eval_params;
    eval_params.scripts = eval_scripts;
    eval_params.seed = seed;
    eval_params.id_prefix = kind == "selectional" ? "sel-eval" : "sal-eval";

    const auto train = toyworld::make_world(kind, train_params);
    const auto eval = toyworld::make_world(kind, eval_params);
    corpus::write_corpus((fs::path(out_dir) / "train.jsonl").string(), train);
    corpus::write_corpus((fs::path(out_dir) / "eval.jsonl").string(), eval);

    long long train_events = 0;
    for (const auto& s : train) train_events += static_cast<long long>(s.events.size());
    progress(kind + " world: " + std::to_string(train.size()) + " train scripts (" +
             std::to_string(train_events) + " events), " + std::to_string(eval.size()) +
             " eval scripts -> " + out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evimp: narrative event models for implicit argument prediction"};
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest = app.add_subcommand("ingest", "Validate and normalize raw corpus records");
    std::string in_path, out_path;
    int ingest_workers = 1;
    ingest->add_option("--input", in_path, "Raw corpus (JSON lines)")->required();
    ingest->add_option("--output", out_path, "Canonical corpus output")->required();
    ingest->add_option("--workers", ingest_workers, "Parser workers")->capture_default_str();
    ingest->set_config("--config");

    // ---- vocab ----
    auto* vocab_cmd = app.add_subcommand("vocab", "Build the frequency-thresholded vocabulary");
    std::string vc_corpus, vc_out;
    long long vc_threshold = 500;
    size_t vc_topk = 50;
    int vc_workers = 1;
    vocab_cmd->add_option("--corpus", vc_corpus, "Corpus file")->required();
    vocab_cmd->add_option("--output", vc_out, "Vocabulary output")->required();
    vocab_cmd
        ->add_option("--verb-arg-threshold", vc_threshold,
                     "Retain verbs/arguments with counts strictly above this")
        ->capture_default_str();
    vocab_cmd->add_option("--prep-top-k", vc_topk, "Number of prepositions to retain")
        ->capture_default_str();
    vocab_cmd->add_option("--workers", vc_workers, "Counting workers")->capture_default_str();
    vocab_cmd->set_config("--config");

    // ---- sentences ----
    auto* sent_cmd = app.add_subcommand("sentences", "Emit event pseudo-sentences for SGNS");
    std::string se_corpus, se_vocab, se_out;
    long long se_downsample = 100000;
    uint64_t se_seed = 42;
    sent_cmd->add_option("--corpus", se_corpus, "Corpus file")->required();
    sent_cmd->add_option("--vocab", se_vocab, "Vocabulary file")->required();
    sent_cmd->add_option("--output", se_out, "Sentence file output")->required();
    sent_cmd
        ->add_option("--downsample-threshold", se_downsample,
                     "Verbs above this count are kept with probability threshold/count")
        ->capture_default_str();
    sent_cmd->add_option("--seed", se_seed, "Random seed")->capture_default_str();
    sent_cmd->set_config("--config");

    // ---- train-embeddings ----
    auto* emb_cmd =
        app.add_subcommand("train-embeddings", "Train skip-gram negative-sampling embeddings");
    std::string em_sentences, em_vocab, em_out, em_bin;
    embeddings::SgnsParams em_params;
    uint64_t em_seed = 42;
    emb_cmd->add_option("--sentences", em_sentences, "Pseudo-sentence file")->required();
    emb_cmd->add_option("--vocab", em_vocab, "Vocabulary file")->required();
    emb_cmd->add_option("--output", em_out, "Text embedding output");
    emb_cmd->add_option("--binary", em_bin, "Binary embedding output");
    emb_cmd->add_option("--dim", em_params.dim, "Embedding size")->capture_default_str();
    emb_cmd->add_option("--window", em_params.window, "Context window")->capture_default_str();
    emb_cmd->add_option("--negatives", em_params.negatives, "Negative samples per pair")
        ->capture_default_str();
    emb_cmd->add_option("--subsample", em_params.subsample_t, "Subsampling threshold")
        ->capture_default_str();
    emb_cmd->add_option("--epochs", em_params.epochs, "Training epochs")->capture_default_str();
    emb_cmd->add_option("--alpha", em_params.alpha, "Initial learning rate")
        ->capture_default_str();
    emb_cmd->add_option("--min-alpha", em_params.min_alpha, "Final learning rate")
        ->capture_default_str();
    emb_cmd
        ->add_option("--workers", em_params.workers,
                     "Training workers (>1 tolerates write races)")
        ->capture_default_str();
    emb_cmd->add_option("--seed", em_seed, "Random seed")->capture_default_str();
    emb_cmd->set_config("--config");

    // ---- gen-triples ----
    auto* tri_cmd = app.add_subcommand("gen-triples", "Generate training triples");
    std::string tg_corpus, tg_vocab, tg_out;
    uint64_t tg_seed = 42;
    cloze::TripleGenConfig tg_cfg;
    tg_cfg.per_doc_cap = 20;
    tri_cmd->add_option("--corpus", tg_corpus, "Corpus file")->required();
    tri_cmd->add_option("--vocab", tg_vocab, "Vocabulary file")->required();
    tri_cmd->add_option("--output", tg_out, "Triple file output")->required();
    tri_cmd->add_option("--seed", tg_seed, "Random seed")->capture_default_str();
    tri_cmd->add_flag("--multi-arg", tg_cfg.multi_arg,
                      "Also emit move negatives for multi implicit-argument training");
    tri_cmd
        ->add_option("--negatives-per-pair", tg_cfg.negatives_per_pair,
                     "Replace negatives per (context, positive) pair")
        ->capture_default_str();
    tri_cmd
        ->add_option("--per-doc-cap", tg_cfg.per_doc_cap,
                     "Max triples per document (0 = unlimited)")
        ->capture_default_str();
    tri_cmd
        ->add_option("--downsample-threshold", tg_cfg.downsample_threshold,
                     "Frequent-verb downsampling threshold")
        ->capture_default_str();
    tri_cmd->set_config("--config");

    // ---- gen-cloze ----
    auto* clz_cmd =
        app.add_subcommand("gen-cloze", "Generate argument-cloze evaluation instances");
    std::string cg_corpus, cg_out;
    uint64_t cg_seed = 42;
    size_t cg_cap = 0;
    clz_cmd->add_option("--corpus", cg_corpus, "Corpus file")->required();
    clz_cmd->add_option("--output", cg_out, "Cloze instance output")->required();
    clz_cmd->add_option("--seed", cg_seed, "Random seed")->capture_default_str();
    clz_cmd->add_option("--per-doc-cap", cg_cap, "Max instances per document (0 = unlimited)")
        ->capture_default_str();
    clz_cmd->set_config("--config");

    // ---- train-model ----
    auto* trm_cmd = app.add_subcommand("train-model", "Train the event composition model");
    std::string tm_triples, tm_vocab, tm_embeddings, tm_out, tm_tag = "eventcomp";
    bool tm_binary = false;
    TrainModelOptions tm_opt;
    trm_cmd->add_option("--triples", tm_triples, "Triple file")->required();
    trm_cmd->add_option("--vocab", tm_vocab, "Vocabulary file")->required();
    trm_cmd->add_option("--embeddings", tm_embeddings, "Pretrained embedding file")->required();
    trm_cmd->add_option("--output", tm_out, "Checkpoint output")->required();
    trm_cmd->add_flag("--binary", tm_binary, "Write the binary checkpoint form");
    trm_cmd->add_option("--tag", tm_tag, "Model tag recorded in the manifest")
        ->capture_default_str();
    tm_opt.attach(trm_cmd);
    trm_cmd->set_config("--config");

    // ---- predict ----
    auto* prd_cmd = app.add_subcommand("predict", "Score cloze instances and dump rankings");
    std::string pr_corpus, pr_cloze, pr_model, pr_vocab, pr_embeddings, pr_out, pr_agg = "max",
                                                                               pr_tag;
    uint64_t pr_seed = 42;
    int pr_workers = 1;
    bool pr_force = false;
    prd_cmd->add_option("--corpus", pr_corpus, "Corpus file")->required();
    prd_cmd->add_option("--cloze", pr_cloze, "Cloze instance file")->required();
    prd_cmd
        ->add_option("--model", pr_model,
                     "Checkpoint path or baseline (random|mostfreq|eventword2vec)")
        ->required();
    prd_cmd->add_option("--vocab", pr_vocab, "Vocabulary file (checkpoint models)");
    prd_cmd->add_option("--embeddings", pr_embeddings, "Embedding file (eventword2vec)");
    prd_cmd->add_option("--output", pr_out, "Prediction dump output")->required();
    prd_cmd->add_option("--aggregation", pr_agg, "Context aggregation (max|sum)")
        ->capture_default_str();
    prd_cmd->add_option("--seed", pr_seed, "Random seed")->capture_default_str();
    prd_cmd->add_option("--workers", pr_workers, "Scoring workers")->capture_default_str();
    prd_cmd->add_flag("--force", pr_force, "Ignore vocabulary hash mismatches");
    prd_cmd->add_option("--tag", pr_tag, "Override the model tag in the dump");
    prd_cmd->set_config("--config");

    // ---- evaluate ----
    auto* evl_cmd = app.add_subcommand("evaluate", "Evaluate a predictor on cloze instances");
    std::string ev_corpus, ev_cloze, ev_model, ev_vocab, ev_embeddings, ev_out, ev_json, ev_plot,
        ev_agg = "max", ev_tag, ev_buckets;
    uint64_t ev_seed = 42;
    bool ev_force = false;
    evl_cmd->add_option("--corpus", ev_corpus, "Corpus file")->required();
    evl_cmd->add_option("--cloze", ev_cloze, "Cloze instance file")->required();
    evl_cmd
        ->add_option("--model", ev_model,
                     "Checkpoint path or baseline (random|mostfreq|eventword2vec)")
        ->required();
    evl_cmd->add_option("--vocab", ev_vocab, "Vocabulary file");
    evl_cmd->add_option("--embeddings", ev_embeddings, "Embedding file (eventword2vec)");
    evl_cmd->add_option("--output", ev_out, "Report output (default: stdout)");
    evl_cmd->add_option("--json", ev_json, "Machine-readable JSON report output");
    evl_cmd->add_option("--emit-plot-data", ev_plot, "Per-bucket CSV output");
    evl_cmd->add_option("--aggregation", ev_agg, "Context aggregation (max|sum)")
        ->capture_default_str();
    evl_cmd->add_option("--seed", ev_seed, "Random seed")->capture_default_str();
    evl_cmd->add_flag("--force", ev_force, "Ignore vocabulary hash mismatches");
    evl_cmd->add_option("--tag", ev_tag, "Override the model tag");
    evl_cmd->add_option("--freq-buckets", ev_buckets,
                        "Entity-frequency bucket upper bounds (comma list)");
    evl_cmd->set_config("--config");

    // ---- ablate ----
    auto* abl_cmd = app.add_subcommand("ablate", "Train and evaluate salience ablations");
    std::string ab_triples, ab_vocab, ab_embeddings, ab_corpus, ab_cloze, ab_out,
        ab_groups = "mentions,head_count,1st_loc", ab_agg = "max";
    TrainModelOptions ab_opt;
    abl_cmd->add_option("--triples", ab_triples, "Triple file")->required();
    abl_cmd->add_option("--vocab", ab_vocab, "Vocabulary file")->required();
    abl_cmd->add_option("--embeddings", ab_embeddings, "Pretrained embedding file")->required();
    abl_cmd->add_option("--corpus", ab_corpus, "Evaluation corpus")->required();
    abl_cmd->add_option("--cloze", ab_cloze, "Evaluation cloze instances")->required();
    abl_cmd->add_option("--groups", ab_groups, "Feature groups to ablate one at a time")
        ->capture_default_str();
    abl_cmd->add_option("--aggregation", ab_agg, "Context aggregation (max|sum)")
        ->capture_default_str();
    abl_cmd->add_option("--output", ab_out, "Ablation table output (default: stdout)");
    ab_opt.attach(abl_cmd);
    abl_cmd->set_config("--config");

    // ---- gc-convert ----
    auto* gcc_cmd =
        app.add_subcommand("gc-convert", "Convert nominal-predicate records to instances");
    std::string gcc_in, gcc_map, gcc_out;
    gcc_cmd->add_option("--input", gcc_in, "Enriched instance records (JSON lines)")->required();
    gcc_cmd->add_option("--mappings", gcc_map,
                        "Role mapping table (default: built-in ten predicates)");
    gcc_cmd->add_option("--output", gcc_out, "Converted instance dump")->required();
    gcc_cmd->set_config("--config");

    // ---- gc-train-fnf ----
    auto* gct_cmd = app.add_subcommand("gc-train-fnf", "Train the fill/no-fill classifier");
    std::string gct_in, gct_map, gct_out;
    double gct_l2 = 0.001, gct_lr = 0.1;
    int gct_epochs = 50;
    uint64_t gct_seed = 42;
    gct_cmd->add_option("--input", gct_in, "Enriched instance records")->required();
    gct_cmd->add_option("--mappings", gct_map, "Role mapping table");
    gct_cmd->add_option("--output", gct_out, "Classifier output")->required();
    gct_cmd->add_option("--l2", gct_l2, "L2 strength")->capture_default_str();
    gct_cmd->add_option("--epochs", gct_epochs, "SGD epochs")->capture_default_str();
    gct_cmd->add_option("--lr", gct_lr, "SGD learning rate")->capture_default_str();
    gct_cmd->add_option("--seed", gct_seed, "Random seed")->capture_default_str();
    gct_cmd->set_config("--config");

    // ---- gc-evaluate ----
    auto* gce_cmd =
        app.add_subcommand("gc-evaluate", "Multi implicit-argument prediction with P/R/F1");
    std::string gce_in, gce_map, gce_model, gce_vocab, gce_fnf, gce_out, gce_agg = "max";
    bool gce_cv = false, gce_oracle = false, gce_exclusive = false, gce_force = false;
    double gce_l2 = 0.001, gce_lr = 0.1;
    int gce_epochs = 50;
    uint64_t gce_seed = 42;
    gce_cmd->add_option("--input", gce_in, "Enriched instance records")->required();
    gce_cmd->add_option("--mappings", gce_map, "Role mapping table");
    gce_cmd->add_option("--model", gce_model, "Event composition checkpoint")->required();
    gce_cmd->add_option("--vocab", gce_vocab, "Vocabulary file")->required();
    gce_cmd->add_option("--fnf", gce_fnf, "Fill/no-fill classifier file");
    gce_cmd->add_flag("--fnf-cv", gce_cv, "Leave-one-predicate-out classifier training");
    gce_cmd->add_flag("--oracle-fill", gce_oracle,
                      "Skip the fill/no-fill decision (always fill)");
    gce_cmd->add_option("--aggregation", gce_agg, "Context aggregation (max|sum)")
        ->capture_default_str();
    gce_cmd->add_flag("--exclusive", gce_exclusive,
                      "Remove chosen candidates from later role pools");
    gce_cmd->add_option("--output", gce_out, "Report output (default: stdout)");
    gce_cmd->add_option("--l2", gce_l2, "Classifier L2 (with --fnf-cv)")->capture_default_str();
    gce_cmd->add_option("--epochs", gce_epochs, "Classifier epochs (with --fnf-cv)")
        ->capture_default_str();
    gce_cmd->add_option("--lr", gce_lr, "Classifier learning rate (with --fnf-cv)")
        ->capture_default_str();
    gce_cmd->add_option("--seed", gce_seed, "Random seed")->capture_default_str();
    gce_cmd->add_flag("--force", gce_force, "Ignore vocabulary hash mismatches");
    gce_cmd->set_config("--config");

    // ---- gradient-check ----
    auto* grd_cmd = app.add_subcommand("gradient-check",
                                       "Verify analytic gradients against finite differences");
    int gr_models = 10, gr_batch = 3, gr_dim = 8;
    double gr_step = 1e-5, gr_tol = 1e-4;
    uint64_t gr_seed = 42;
    grd_cmd->add_option("--models", gr_models, "Number of random models")->capture_default_str();
    grd_cmd->add_option("--batch", gr_batch, "Triples per batch")->capture_default_str();
    grd_cmd->add_option("--step", gr_step, "Central-difference step")->capture_default_str();
    grd_cmd->add_option("--tolerance", gr_tol, "Max relative error")->capture_default_str();
    grd_cmd->add_option("--seed", gr_seed, "Random seed")->capture_default_str();
    grd_cmd->add_option("--dim", gr_dim, "Embedding dim of the probe models")
        ->capture_default_str();
    grd_cmd->set_config("--config");

    // ---- toy-world ----
    auto* toy_cmd = app.add_subcommand("toy-world", "Generate synthetic acceptance corpora");
    std::string tw_kind, tw_dir;
    int tw_scripts = 2000, tw_eval = 200;
    uint64_t tw_seed = 7;
    toy_cmd->add_option("--kind", tw_kind, "World kind (selectional|salience)")->required();
    toy_cmd->add_option("--output-dir", tw_dir, "Directory for train.jsonl / eval.jsonl")
        ->required();
    toy_cmd->add_option("--scripts", tw_scripts, "Training scripts")->capture_default_str();
    toy_cmd->add_option("--eval-scripts", tw_eval, "Held-out scripts")->capture_default_str();
    toy_cmd->add_option("--seed", tw_seed, "Random seed")->capture_default_str();
    toy_cmd->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ingest) run_ingest(in_path, out_path, ingest_workers);
        if (*vocab_cmd) run_vocab(vc_corpus, vc_out, vc_threshold, vc_topk, vc_workers);
        if (*sent_cmd) run_sentences(se_corpus, se_vocab, se_out, se_downsample, se_seed);
        if (*emb_cmd) {
            if (em_out.empty() && em_bin.empty())
                throw ContractError("train-embeddings needs --output and/or --binary");
            run_train_embeddings(em_sentences, em_vocab, em_out, em_bin, em_params, em_seed);
        }
        if (*tri_cmd) run_gen_triples(tg_corpus, tg_vocab, tg_out, tg_seed, tg_cfg);
        if (*clz_cmd) run_gen_cloze(cg_corpus, cg_out, cg_seed, cg_cap);
        if (*trm_cmd)
            run_train_model(tm_triples, tm_vocab, tm_embeddings, tm_out, tm_binary, tm_opt,
                            tm_tag, echo_config(*trm_cmd));
        if (*prd_cmd)
            run_predict(pr_corpus, pr_cloze, pr_model, pr_vocab, pr_embeddings, pr_out,
                        inference::aggregation_from(pr_agg), pr_seed, pr_workers, pr_force,
                        pr_tag);
        if (*evl_cmd)
            run_evaluate(ev_corpus, ev_cloze, ev_model, ev_vocab, ev_embeddings, ev_out, ev_json,
                         ev_plot, inference::aggregation_from(ev_agg), ev_seed, ev_force, ev_tag,
                         ev_buckets, echo_config(*evl_cmd));
        if (*abl_cmd)
            run_ablate(ab_triples, ab_vocab, ab_embeddings, ab_corpus, ab_cloze, ab_groups,
                       ab_opt, inference::aggregation_from(ab_agg), ab_out);
        if (*gcc_cmd) run_gc_convert(gcc_in, gcc_map, gcc_out);
        if (*gct_cmd)
            run_gc_train_fnf(gct_in, gct_map, gct_out, gct_l2, gct_epochs, gct_lr, gct_seed);
        if (*gce_cmd)
            run_gc_evaluate(gce_in, gce_map, gce_model, gce_vocab, gce_fnf, gce_cv, gce_oracle,
                            inference::aggregation_from(gce_agg), gce_exclusive, gce_out, gce_l2,
                            gce_epochs, gce_lr, gce_seed, gce_force);
        if (*grd_cmd)
            return run_gradient_check(gr_models, gr_batch, gr_step, gr_tol, gr_seed, gr_dim);
        if (*toy_cmd) run_toy_world(tw_kind, tw_dir, tw_scripts, tw_eval, tw_seed);
    } catch (const NumericError& e) {
        std::cerr << "evimp: numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "evimp: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
