#pragma once

// Event-based pseudo-sentences and skip-gram-with-negative-sampling training,
// plus the EventWord2vec representation (sum of component embeddings) and
// cosine coherence.
//
// Multi-worker training uses lock-free shared updates (racy writes tolerated,
// as is standard for this family of trainers); single-worker mode is bitwise
// deterministic under a fixed seed.

#include <atomic>
#include <cstring>
#include <span>
#include <thread>

#include "evimp/cloze.hpp"
#include "evimp/corpus.hpp"

namespace evimp::embeddings {

using corpus::Event;
using corpus::Script;
using corpus::Vocabulary;

inline constexpr char kBinaryMagic[4] = {'E', 'V', 'W', '1'};

// ---------------------------------------------------------------------------
// Walker alias sampler: exact draws from an arbitrary discrete distribution.
class AliasSampler {
  public:
    AliasSampler() = default;

    explicit AliasSampler(const std::vector<double>& weights) {
        const size_t n = weights.size();
        if (n == 0) throw ContractError("AliasSampler: empty weight vector");
        double total = 0;
        for (double w : weights) {
            if (w < 0) throw ContractError("AliasSampler: negative weight");
            total += w;
        }
        if (total <= 0) throw ContractError("AliasSampler: zero total weight");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<size_t> small, large;
        for (size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const size_t s = small.back();
            const size_t l = large.back();
            small.pop_back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (size_t i : large) prob_[i] = 1.0;
        for (size_t i : small) prob_[i] = 1.0;
    }

    size_t sample(Rng& rng) const {
        const size_t i = rng.index(prob_.size());
        return rng.real() < prob_[i] ? i : alias_[i];
    }

    size_t size() const { return prob_.size(); }

  private:
    std::vector<double> prob_;
    std::vector<size_t> alias_;
};

// Negative-sampling distribution: unigram counts raised to the 3/4 power.
inline AliasSampler make_negative_sampler(const Vocabulary& vocab, double power = 0.75) {
    std::vector<double> weights(vocab.size());
    for (size_t i = 0; i < vocab.size(); ++i)
        weights[i] = std::pow(static_cast<double>(std::max<long long>(vocab.counts[i], 0)), power);
    return AliasSampler(weights);
}

// ---------------------------------------------------------------------------

struct SgnsParams {
    int dim = 300;
    int window = 10;
    int negatives = 10;
    double subsample_t = 1e-4;
    int epochs = 5;
    double alpha = 0.025;     // initial learning rate, linear decay
    double min_alpha = 1e-4;
    double unigram_pow = 0.75;
    int workers = 1;
};

struct EmbeddingTable {
    int dim = 0;
    std::vector<float> input;   // |V| x dim, the vectors used downstream
    std::vector<float> output;  // |V| x dim, negative-sampling context vectors
    Vocabulary vocab;

    std::span<const float> row(int id) const {
        return {input.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
    std::span<float> row(int id) {
        return {input.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
    }
};

struct SgnsResult {
    EmbeddingTable table;
    std::vector<double> probe_loss;  // one per completed epoch, on a fixed probe sample
};

// One pseudo-sentence per script: each event contributes its predicate token
// followed by the tokens of its non-empty arguments in slot order.
inline std::vector<std::string> build_pseudo_sentence(const Script& script) {
    std::vector<std::string> sentence;
    for (const Event& ev : script.events) {
        auto tokens = corpus::event_tokens(ev, script.entities);
        sentence.insert(sentence.end(), tokens.begin(), tokens.end());
    }
    return sentence;
}

inline std::vector<int> to_token_ids(const std::vector<std::string>& sentence,
                                     const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(sentence.size());
    for (const std::string& tok : sentence) ids.push_back(vocab.id(tok));
    return ids;
}

// ---------------------------------------------------------------------------

inline double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ContractError("cosine: dimension mismatch");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    // Zero vectors compare as 0 so untrained/OOV lookups never poison a max.
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    return cosine(std::span<const float>(a), std::span<const float>(b));
}

// Event representation for the EventWord2vec baseline: sum of the input
// vectors of the predicate and each non-empty argument token.
inline std::vector<float> eventword2vec_repr(const Event& event,
                                             const std::vector<corpus::Entity>& entities,
                                             const EmbeddingTable& table) {
    std::vector<float> repr(table.dim, 0.0f);
    auto add = [&](int id) {
        const auto r = table.row(id);
        for (int i = 0; i < table.dim; ++i) repr[i] += r[i];
    };
    add(table.vocab.id(corpus::verb_token(event)));
    for (corpus::ArgPosition p : corpus::kAllPositions) {
        const corpus::Argument& a = event.arg(p);
        if (!a.is_empty()) add(table.vocab.id(corpus::argument_token(a, p, entities)));
    }
    return repr;
}

// ---------------------------------------------------------------------------
// SGNS training

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ProbePair {
    int center;
    int context;
    std::vector<int> negatives;
};

// Mean SGNS loss -log s(u.v) - sum log s(-u_k.v) over a fixed probe sample.
inline double probe_loss(const EmbeddingTable& t, const std::vector<ProbePair>& probes) {
    if (probes.empty()) return 0.0;
    double total = 0;
    for (const ProbePair& p : probes) {
        const float* v = t.input.data() + static_cast<size_t>(p.center) * t.dim;
        auto dot_with = [&](int id) {
            const float* u = t.output.data() + static_cast<size_t>(id) * t.dim;
            double d = 0;
            for (int i = 0; i < t.dim; ++i) d += static_cast<double>(u[i]) * v[i];
            return d;
        };
        double loss = -std::log(std::max(sigmoid(dot_with(p.context)), 1e-12));
        for (int n : p.negatives) loss += -std::log(std::max(sigmoid(-dot_with(n)), 1e-12));
        total += loss;
    }
    return total / static_cast<double>(probes.size());
}

}  // namespace detail

inline SgnsResult train_sgns(const std::vector<std::vector<int>>& sentences,
                             const SgnsParams& params, const Vocabulary& vocab, uint64_t seed) {
    if (params.dim <= 0 || params.window <= 0 || params.negatives < 0 || params.epochs < 0)
        throw ContractError("train_sgns: invalid parameters");
    if (!(params.subsample_t > 0.0 && params.subsample_t <= 1.0))
        throw ContractError("train_sgns: subsample_t must be in (0, 1]");

    const int oov = vocab.oov_id;
    std::vector<const std::vector<int>*> usable;
    long long usable_words = 0;
    for (const auto& s : sentences) {
        if (s.empty()) continue;
        bool all_oov = true;
        for (int id : s)
            if (id != oov) {
                all_oov = false;
                break;
            }
        if (all_oov) continue;  // OOV-only sentences carry no signal
        usable.push_back(&s);
        usable_words += static_cast<long long>(s.size());
    }
    if (usable.empty()) throw ContractError("train_sgns: empty sentence stream");

    const size_t n_tokens = vocab.size();
    const int dim = params.dim;

    SgnsResult result;
    EmbeddingTable& table = result.table;
    table.dim = dim;
    table.vocab = vocab;
    table.input.resize(n_tokens * static_cast<size_t>(dim));
    table.output.assign(n_tokens * static_cast<size_t>(dim), 0.0f);

    Rng init_rng(seed);
    for (float& w : table.input)
        w = static_cast<float>((init_rng.real() - 0.5) / dim);

    // Subsampling drop probability per token: 1 - sqrt(t / f), clamped.
    const double total_count = static_cast<double>(std::max<long long>(vocab.total_count(), 1));
    std::vector<double> drop(n_tokens, 0.0);
    for (size_t i = 0; i < n_tokens; ++i) {
        const double f = static_cast<double>(std::max<long long>(vocab.counts[i], 0)) / total_count;
        if (f > 0)
            drop[i] = std::clamp(1.0 - std::sqrt(params.subsample_t / f), 0.0, 1.0);
    }

    const AliasSampler neg_sampler = make_negative_sampler(vocab, params.unigram_pow);

    // Fixed probe sample for the per-epoch loss estimate.
    std::vector<detail::ProbePair> probes;
    {
        Rng probe_rng(seed ^ 0x9e3779b97f4a7c15ull);
        const size_t want = std::min<size_t>(2000, static_cast<size_t>(usable_words));
        for (size_t tries = 0; probes.size() < want && tries < want * 20; ++tries) {
            const auto& s = *usable[probe_rng.index(usable.size())];
            if (s.size() < 2) continue;
            const size_t i = probe_rng.index(s.size());
            size_t j = probe_rng.index(s.size() - 1);
            if (j >= i) ++j;
            if (std::max(i, j) - std::min(i, j) > static_cast<size_t>(params.window)) continue;
            detail::ProbePair p;
            p.center = s[i];
            p.context = s[j];
            // Mirrors training: negatives equal to the context token are skipped.
            for (int k = 0; k < params.negatives; ++k) {
                const int neg = static_cast<int>(neg_sampler.sample(probe_rng));
                if (neg != p.context) p.negatives.push_back(neg);
            }
            probes.push_back(std::move(p));
        }
    }

    if (params.epochs == 0) return result;  // initial random table, unchanged

    const long long total_to_process =
        std::max<long long>(1, usable_words * static_cast<long long>(params.epochs));
    std::atomic<long long> processed{0};
    float* const input = table.input.data();
    float* const output = table.output.data();

    auto worker = [&](int tid, int n_workers, uint64_t wseed) {
        Rng rng(wseed);
        std::vector<int> kept;
        std::vector<float> grad(dim);
        double lr = params.alpha;
        long long local_since_update = 0;

        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            for (size_t si = static_cast<size_t>(tid); si < usable.size();
                 si += static_cast<size_t>(n_workers)) {
                const std::vector<int>& sentence = *usable[si];

                local_since_update += static_cast<long long>(sentence.size());
                if (local_since_update >= 10000) {
                    const long long done =
                        processed.fetch_add(local_since_update) + local_since_update;
                    local_since_update = 0;
                    lr = std::max(params.min_alpha,
                                  params.alpha * (1.0 - static_cast<double>(done) /
                                                            static_cast<double>(total_to_process)));
                }

                kept.clear();
                for (int id : sentence) {
                    if (drop[id] > 0 && rng.real() < drop[id]) continue;
                    kept.push_back(id);
                }
                if (kept.size() < 2) continue;

                for (size_t i = 0; i < kept.size(); ++i) {
                    const int center = kept[i];
                    float* v = input + static_cast<size_t>(center) * dim;
                    const size_t win = 1 + rng.index(static_cast<size_t>(params.window));
                    const size_t lo = i >= win ? i - win : 0;
                    const size_t hi = std::min(kept.size() - 1, i + win);
                    for (size_t j = lo; j <= hi; ++j) {
                        if (j == i) continue;
                        const int context = kept[j];
                        std::fill(grad.begin(), grad.end(), 0.0f);
                        // Positive pair.
                        {
                            float* u = output + static_cast<size_t>(context) * dim;
                            double d = 0;
                            for (int q = 0; q < dim; ++q) d += static_cast<double>(u[q]) * v[q];
                            const float g = static_cast<float>((1.0 - detail::sigmoid(d)) * lr);
                            for (int q = 0; q < dim; ++q) {
                                grad[q] += g * u[q];
                                u[q] += g * v[q];
                            }
                        }
                        // Negatives from the unigram^0.75 distribution.
                        for (int k = 0; k < params.negatives; ++k) {
                            const int neg = static_cast<int>(neg_sampler.sample(rng));
                            if (neg == context) continue;
                            float* u = output + static_cast<size_t>(neg) * dim;
                            double d = 0;
                            for (int q = 0; q < dim; ++q) d += static_cast<double>(u[q]) * v[q];
                            const float g = static_cast<float>((0.0 - detail::sigmoid(d)) * lr);
                            for (int q = 0; q < dim; ++q) {
                                grad[q] += g * u[q];
                                u[q] += g * v[q];
                            }
                        }
                        for (int q = 0; q < dim; ++q) v[q] += grad[q];
                    }
                }
            }
            if (tid == 0) result.probe_loss.push_back(detail::probe_loss(table, probes));
        }
    };

    const int n_workers = std::max(1, params.workers);
    if (n_workers == 1) {
        worker(0, 1, seed + 1);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < n_workers; ++t)
            threads.emplace_back(worker, t, n_workers, seed + 1 + static_cast<uint64_t>(t));
        for (auto& t : threads) t.join();
    }

    for (float w : table.input)
        if (!std::isfinite(w)) throw NumericError("train_sgns: non-finite embedding weight");
    return result;
}

// ---------------------------------------------------------------------------
// Persistence. Text: "dim=<d> vocab=<n>" header then one token per line with
// its vector. Binary: magic EVW1, little-endian uint32 dim/count, row-major
// float32 matrix, then the token list.

inline void write_embeddings_text(const std::string& path, const EmbeddingTable& table) {
    atomic_write(path, [&](std::ostream& out) {
        out << "dim=" << table.dim << " vocab=" << table.vocab.size() << "\n";
        for (size_t i = 0; i < table.vocab.size(); ++i) {
            out << table.vocab.tokens[i];
            const auto r = table.row(static_cast<int>(i));
            for (float v : r) out << " " << format_float(v);
            out << "\n";
        }
    });
}

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated binary embedding file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_embeddings_binary(const std::string& path, const EmbeddingTable& table) {
    static_assert(std::endian::native == std::endian::little,
                  "binary embedding format assumes a little-endian host");
    atomic_write(path, [&](std::ostream& out) {
        out.write(kBinaryMagic, 4);
        detail::put_u32(out, static_cast<uint32_t>(table.dim));
        detail::put_u32(out, static_cast<uint32_t>(table.vocab.size()));
        out.write(reinterpret_cast<const char*>(table.input.data()),
                  static_cast<std::streamsize>(table.input.size() * sizeof(float)));
        for (const std::string& tok : table.vocab.tokens) out << tok << "\n";
    });
}

// Loads either form; `vocab`, when given, must list the same tokens in the
// same order and is attached to the table (embedding files carry no counts).
inline EmbeddingTable read_embeddings(const std::string& path,
                                      const Vocabulary* vocab = nullptr) {
    std::ifstream in = open_input(path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in) throw FormatError("embedding file " + path + ": too short");

    EmbeddingTable table;
    std::vector<std::string> tokens;

    if (std::memcmp(magic, kBinaryMagic, 4) == 0) {
        table.dim = static_cast<int>(detail::get_u32(in));
        const uint32_t n = detail::get_u32(in);
        table.input.resize(static_cast<size_t>(n) * table.dim);
        in.read(reinterpret_cast<char*>(table.input.data()),
                static_cast<std::streamsize>(table.input.size() * sizeof(float)));
        if (!in) throw FormatError("embedding file " + path + ": truncated matrix");
        std::string tok;
        for (uint32_t i = 0; i < n; ++i) {
            if (!std::getline(in, tok))
                throw FormatError("embedding file " + path + ": truncated token list");
            tokens.push_back(tok);
        }
    } else {
        in.seekg(0);
        std::string header;
        std::getline(in, header);
        int dim = -1;
        long long n = -1;
        for (const std::string& f : split(header, ' ')) {
            if (starts_with(f, "dim=")) dim = std::stoi(f.substr(4));
            if (starts_with(f, "vocab=")) n = std::stoll(f.substr(6));
        }
        if (dim <= 0 || n < 0)
            throw FormatError("embedding file " + path + ": bad header '" + header + "'");
        table.dim = dim;
        table.input.reserve(static_cast<size_t>(n) * dim);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string tok;
            ss >> tok;
            tokens.push_back(tok);
            float v;
            int got = 0;
            while (ss >> v) {
                table.input.push_back(v);
                ++got;
            }
            if (got != dim)
                throw FormatError("embedding file " + path + ": token '" + tok + "' has " +
                                  std::to_string(got) + " values, expected " + std::to_string(dim));
        }
        if (static_cast<long long>(tokens.size()) != n)
            throw FormatError("embedding file " + path + ": header says " + std::to_string(n) +
                              " tokens, found " + std::to_string(tokens.size()));
    }

    if (vocab) {
        if (vocab->size() != tokens.size())
            throw FormatError("embedding file " + path + ": vocabulary size mismatch");
        for (size_t i = 0; i < tokens.size(); ++i)
            if (vocab->tokens[i] != tokens[i])
                throw FormatError("embedding file " + path + ": token order mismatch at id " +
                                  std::to_string(i));
        table.vocab = *vocab;
    } else {
        table.vocab.tokens = tokens;
        table.vocab.counts.assign(tokens.size(), 0);
        table.vocab.oov_id = 0;
        for (size_t i = 0; i < tokens.size(); ++i) {
            table.vocab.token_to_id.emplace(tokens[i], static_cast<int>(i));
            if (tokens[i] == corpus::kOovToken) table.vocab.oov_id = static_cast<int>(i);
        }
    }
    table.output.assign(table.input.size(), 0.0f);
    return table;
}

}  // namespace evimp::embeddings
