#pragma once

// The event-composition coherence model: embedding inputs, a two-layer
// argument composition network, a pair composition network with extra
// (position + salience) features, cross-entropy training by plain SGD, and a
// finite-difference gradient checker.
//
// The model is templated on the scalar type: float for production training
// and scoring, double for gradient verification.

#include <unordered_map>
#include <unordered_set>

#include "evimp/cloze.hpp"
#include "evimp/embeddings.hpp"
#include "evimp/salience.hpp"

namespace evimp::eventcomp {

using cloze::TripleRecord;
using corpus::Vocabulary;
using salience::SalienceMask;

inline constexpr const char* kCheckpointHeader = "#evimp-ckpt v1";
inline constexpr char kCheckpointMagic[4] = {'E', 'C', 'M', '1'};
inline constexpr int kCheckpointVersion = 1;
inline constexpr double kProbClamp = 1e-7;

// ---------------------------------------------------------------------------
// Minimal dense linear algebra

template <class S>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<S> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, S(0)) {}

    S* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
    const S* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
    S& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    S at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

enum class Activation { tanh_act, relu_act };

inline const char* to_string(Activation a) {
    return a == Activation::tanh_act ? "tanh" : "relu";
}

inline Activation activation_from(std::string_view s) {
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu_act;
    throw FormatError("unknown activation: " + std::string(s));
}

template <class S>
struct Dense {
    Mat<S> W;           // out x in
    std::vector<S> b;   // out

    Dense() = default;
    Dense(int out, int in) : W(out, in), b(static_cast<size_t>(out), S(0)) {}

    int in() const { return W.cols; }
    int out() const { return W.rows; }

    void forward(const std::vector<S>& x, std::vector<S>& y) const {
        y.resize(static_cast<size_t>(out()));
        for (int i = 0; i < out(); ++i) {
            const S* w = W.row(i);
            S acc = b[static_cast<size_t>(i)];
            for (int j = 0; j < in(); ++j) acc += w[j] * x[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = acc;
        }
    }
};

template <class S>
inline void apply_activation(std::vector<S>& v, Activation act) {
    if (act == Activation::tanh_act)
        for (S& x : v) x = std::tanh(x);
    else
        for (S& x : v) x = x > S(0) ? x : S(0);
}

// Derivative of the activation expressed through its output value.
template <class S>
inline S activation_deriv(S y, Activation act) {
    return act == Activation::tanh_act ? S(1) - y * y : (y > S(0) ? S(1) : S(0));
}

// ---------------------------------------------------------------------------
// Model

struct EventCompHyperParams {
    int dim = 300;
    int arg_hidden = 600;   // argument composition hidden layer
    int event_repr = 300;   // event representation width
    int pair_hidden1 = 400;
    int pair_hidden2 = 200;
    Activation activation = Activation::tanh_act;
    bool raw_salience = false;
};

struct TrainParams {
    double lr = 0.01;
    int batch_size = 100;
    int epochs = 20;
    double l2 = 0.01;
    uint64_t seed = 42;
    bool freeze_embeddings = false;
};

template <class S>
struct EventCompModelT {
    EventCompHyperParams hp;
    SalienceMask mask;
    Vocabulary vocab;
    std::string tag = "eventcomp";

    Mat<S> embeddings;  // |V| x dim, fine-tunable copy of the pretrained table
    Dense<S> arg1, arg2;
    Dense<S> pair1, pair2, out;

    int extra_width() const { return mask.extra_width(); }
    int pair_input_width() const { return 2 * hp.event_repr + extra_width(); }

    void build(size_t vocab_size) {
        embeddings = Mat<S>(static_cast<int>(vocab_size), hp.dim);
        arg1 = Dense<S>(hp.arg_hidden, 4 * hp.dim);
        arg2 = Dense<S>(hp.event_repr, hp.arg_hidden);
        pair1 = Dense<S>(hp.pair_hidden1, pair_input_width());
        pair2 = Dense<S>(hp.pair_hidden2, hp.pair_hidden1);
        out = Dense<S>(1, hp.pair_hidden2);
    }

    // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    void init_weights(Rng& rng) {
        auto fill = [&](Mat<S>& m) {
            const double bound = std::sqrt(6.0 / (m.rows + m.cols));
            for (S& w : m.a) w = static_cast<S>((rng.real() * 2.0 - 1.0) * bound);
        };
        fill(arg1.W);
        fill(arg2.W);
        fill(pair1.W);
        fill(pair2.W);
        fill(out.W);
    }

    void check_shapes() const {
        auto expect = [](bool ok, const char* what) {
            if (!ok) throw ContractError(std::string("model shape violation: ") + what);
        };
        expect(embeddings.cols == hp.dim, "embedding width != dim");
        expect(arg1.in() == 4 * hp.dim, "arg1 input != 4*dim");
        expect(arg1.out() == hp.arg_hidden, "arg1 output");
        expect(arg2.in() == hp.arg_hidden && arg2.out() == hp.event_repr, "arg2 shape");
        expect(pair1.in() == pair_input_width(), "pair1 input != 2*repr + extra");
        expect(pair1.out() == hp.pair_hidden1 && pair2.in() == hp.pair_hidden1, "pair2 input");
        expect(pair2.out() == hp.pair_hidden2 && out.in() == hp.pair_hidden2, "output input");
        expect(out.out() == 1, "output width != 1");
    }
};

using EventCompModel = EventCompModelT<float>;

template <class To, class From>
EventCompModelT<To> cast_model(const EventCompModelT<From>& m) {
    EventCompModelT<To> r;
    r.hp = m.hp;
    r.mask = m.mask;
    r.vocab = m.vocab;
    r.tag = m.tag;
    auto conv_mat = [](const Mat<From>& src) {
        Mat<To> dst(src.rows, src.cols);
        for (size_t i = 0; i < src.a.size(); ++i) dst.a[i] = static_cast<To>(src.a[i]);
        return dst;
    };
    auto conv_dense = [&](const Dense<From>& src) {
        Dense<To> dst;
        dst.W = conv_mat(src.W);
        dst.b.resize(src.b.size());
        for (size_t i = 0; i < src.b.size(); ++i) dst.b[i] = static_cast<To>(src.b[i]);
        return dst;
    };
    r.embeddings = conv_mat(m.embeddings);
    r.arg1 = conv_dense(m.arg1);
    r.arg2 = conv_dense(m.arg2);
    r.pair1 = conv_dense(m.pair1);
    r.pair2 = conv_dense(m.pair2);
    r.out = conv_dense(m.out);
    return r;
}

// ---------------------------------------------------------------------------
// Decoded training example: token ids of the three events plus the masked
// extra-feature vectors of the two judged (position, entity) sides.

template <class S>
struct TrainingExample {
    std::array<int, 4> context{};
    std::array<int, 4> positive{};
    std::array<int, 4> negative{};
    std::vector<S> pos_extra;
    std::vector<S> neg_extra;
};

template <class S>
TrainingExample<S> decode_example(const TripleRecord& r, const SalienceMask& mask,
                                  bool raw_salience) {
    TrainingExample<S> ex;
    ex.context = r.context;
    ex.positive = r.positive;
    ex.negative = r.negative;
    ex.pos_extra = salience::encode_extra_features(static_cast<corpus::ArgPosition>(r.position),
                                                   r.pos_sal, raw_salience)
                       .template masked<S>(mask);
    ex.neg_extra = salience::encode_extra_features(
                       static_cast<corpus::ArgPosition>(r.neg_position), r.neg_sal, raw_salience)
                       .template masked<S>(mask);
    return ex;
}

// ---------------------------------------------------------------------------
// Forward passes

// Concatenated [verb; subj; dobj; pobj] embeddings; empty slots (-1) stay zero
// and OOV ids use the OOV row.
template <class S>
std::vector<S> embed_event_inputs(const EventCompModelT<S>& m, const std::array<int, 4>& ids) {
    std::vector<S> x(static_cast<size_t>(4) * m.hp.dim, S(0));
    for (int slot = 0; slot < 4; ++slot) {
        const int id = ids[static_cast<size_t>(slot)];
        if (id < 0) continue;
        if (id >= m.embeddings.rows)
            throw ContractError("token id outside the embedding table");
        const S* e = m.embeddings.row(id);
        std::copy(e, e + m.hp.dim, x.begin() + static_cast<size_t>(slot) * m.hp.dim);
    }
    return x;
}

template <class S>
struct ComposeTrace {
    std::array<int, 4> ids{};
    std::vector<S> x;   // 4*dim input
    std::vector<S> h1;  // arg_hidden
    std::vector<S> r;   // event_repr
};

template <class S>
void compose_event(const EventCompModelT<S>& m, const std::array<int, 4>& ids,
                   ComposeTrace<S>& t) {
    t.ids = ids;
    t.x = embed_event_inputs(m, ids);
    m.arg1.forward(t.x, t.h1);
    apply_activation(t.h1, m.hp.activation);
    m.arg2.forward(t.h1, t.r);
    apply_activation(t.r, m.hp.activation);
}

template <class S>
std::vector<S> compose_event(const EventCompModelT<S>& m, const std::array<int, 4>& ids) {
    ComposeTrace<S> t;
    compose_event(m, ids, t);
    return t.r;
}

template <class S>
struct PairTrace {
    std::vector<S> z;   // [context_repr; target_repr; extra]
    std::vector<S> g1;
    std::vector<S> g2;
    S logit = S(0);
    S coh = S(0);
};

// Pair composition: logistic coherence of (context, target) with the extra
// features describing the target's judged slot.
template <class S>
S coherence(const EventCompModelT<S>& m, const std::vector<S>& context_repr,
            const std::vector<S>& target_repr, const std::vector<S>& extra, PairTrace<S>* trace) {
    if (static_cast<int>(extra.size()) != m.extra_width())
        throw ContractError("extra feature width does not match the model's salience mask");
    PairTrace<S> local;
    PairTrace<S>& t = trace ? *trace : local;
    t.z.clear();
    t.z.reserve(context_repr.size() + target_repr.size() + extra.size());
    t.z.insert(t.z.end(), context_repr.begin(), context_repr.end());
    t.z.insert(t.z.end(), target_repr.begin(), target_repr.end());
    t.z.insert(t.z.end(), extra.begin(), extra.end());
    m.pair1.forward(t.z, t.g1);
    apply_activation(t.g1, m.hp.activation);
    m.pair2.forward(t.g1, t.g2);
    apply_activation(t.g2, m.hp.activation);
    std::vector<S> o;
    m.out.forward(t.g2, o);
    t.logit = o[0];
    t.coh = static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(t.logit))));
    return t.coh;
}

template <class S>
S coherence(const EventCompModelT<S>& m, const std::vector<S>& context_repr,
            const std::vector<S>& target_repr, const std::vector<S>& extra) {
    return coherence(m, context_repr, target_repr, extra, static_cast<PairTrace<S>*>(nullptr));
}

// ---------------------------------------------------------------------------
// Gradients

template <class S>
struct Gradients {
    Mat<S> arg1W, arg2W, pair1W, pair2W, outW;
    std::vector<S> arg1b, arg2b, pair1b, pair2b, outb;
    std::unordered_map<int, std::vector<S>> embed;  // token id -> dim gradient
    int dim = 0;

    explicit Gradients(const EventCompModelT<S>& m)
        : arg1W(m.arg1.W.rows, m.arg1.W.cols),
          arg2W(m.arg2.W.rows, m.arg2.W.cols),
          pair1W(m.pair1.W.rows, m.pair1.W.cols),
          pair2W(m.pair2.W.rows, m.pair2.W.cols),
          outW(m.out.W.rows, m.out.W.cols),
          arg1b(m.arg1.b.size(), S(0)),
          arg2b(m.arg2.b.size(), S(0)),
          pair1b(m.pair1.b.size(), S(0)),
          pair2b(m.pair2.b.size(), S(0)),
          outb(m.out.b.size(), S(0)),
          dim(m.hp.dim) {}

    void add_embed(int id, const S* g) {
        auto [it, inserted] = embed.try_emplace(id);
        if (inserted) it->second.assign(static_cast<size_t>(dim), S(0));
        for (int i = 0; i < dim; ++i) it->second[static_cast<size_t>(i)] += g[i];
    }

    double embed_grad(int id, int component) const {
        auto it = embed.find(id);
        return it == embed.end() ? 0.0 : static_cast<double>(it->second[component]);
    }
};

namespace detail {

// d(dense with activation) given dL/dy; accumulates into gW/gb and returns
// dL/dx through `dx`.
template <class S>
void backprop_dense(const Dense<S>& layer, const std::vector<S>& x, const std::vector<S>& y,
                    std::vector<S>& dy, Activation act, bool activated, Mat<S>& gW,
                    std::vector<S>& gb, std::vector<S>* dx) {
    if (dx) dx->assign(x.size(), S(0));
    for (int i = 0; i < layer.out(); ++i) {
        S dz = dy[static_cast<size_t>(i)];
        if (activated) dz *= activation_deriv(y[static_cast<size_t>(i)], act);
        if (dz == S(0)) continue;
        gb[static_cast<size_t>(i)] += dz;
        S* gw = gW.row(i);
        const S* w = layer.W.row(i);
        for (int j = 0; j < layer.in(); ++j) {
            gw[j] += dz * x[static_cast<size_t>(j)];
            if (dx) (*dx)[static_cast<size_t>(j)] += dz * w[j];
        }
    }
}

template <class S>
void backprop_pair(const EventCompModelT<S>& m, const PairTrace<S>& t, S dlogit,
                   Gradients<S>& g, std::vector<S>& dctx, std::vector<S>& dtgt) {
    // Output layer (no activation before the logistic; dlogit is already
    // d loss / d logit).
    std::vector<S> dg2(t.g2.size(), S(0));
    g.outb[0] += dlogit;
    {
        S* gw = g.outW.row(0);
        const S* w = m.out.W.row(0);
        for (int j = 0; j < m.out.in(); ++j) {
            gw[j] += dlogit * t.g2[static_cast<size_t>(j)];
            dg2[static_cast<size_t>(j)] += dlogit * w[j];
        }
    }
    std::vector<S> dg1;
    backprop_dense(m.pair2, t.g1, t.g2, dg2, m.hp.activation, true, g.pair2W, g.pair2b, &dg1);
    std::vector<S> dz;
    backprop_dense(m.pair1, t.z, t.g1, dg1, m.hp.activation, true, g.pair1W, g.pair1b, &dz);

    const size_t repr = static_cast<size_t>(m.hp.event_repr);
    for (size_t i = 0; i < repr; ++i) {
        dctx[i] += dz[i];
        dtgt[i] += dz[repr + i];
    }
    // Gradient w.r.t. the extra features is discarded: they are inputs.
}

template <class S>
void backprop_compose(const EventCompModelT<S>& m, const ComposeTrace<S>& t, std::vector<S>& dr,
                      Gradients<S>& g) {
    std::vector<S> dh1;
    backprop_dense(m.arg2, t.h1, t.r, dr, m.hp.activation, true, g.arg2W, g.arg2b, &dh1);
    std::vector<S> dx;
    backprop_dense(m.arg1, t.x, t.h1, dh1, m.hp.activation, true, g.arg1W, g.arg1b, &dx);
    for (int slot = 0; slot < 4; ++slot) {
        const int id = t.ids[static_cast<size_t>(slot)];
        if (id < 0) continue;
        g.add_embed(id, dx.data() + static_cast<size_t>(slot) * m.hp.dim);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Eq.-3 cross-entropy batch loss with L2 on network weights (not biases, not
// embeddings), and gradients for every parameter including the embeddings of
// tokens present in the batch.

template <class S>
struct BatchLossResult {
    double data = 0;   // mean per-triple cross entropy
    double reg = 0;    // (l2/2) * sum of squared network weights
    double total = 0;
    Gradients<S> grads;
};

template <class S>
BatchLossResult<S> batch_loss(const EventCompModelT<S>& m,
                              const std::vector<TrainingExample<S>>& batch, double l2) {
    if (batch.empty()) throw ContractError("batch_loss: empty batch");
    BatchLossResult<S> result{0, 0, 0, Gradients<S>(m)};
    const double inv_m = 1.0 / static_cast<double>(batch.size());

    ComposeTrace<S> ctx, pos, neg;
    PairTrace<S> pos_pair, neg_pair;
    for (const TrainingExample<S>& ex : batch) {
        compose_event(m, ex.context, ctx);
        compose_event(m, ex.positive, pos);
        compose_event(m, ex.negative, neg);
        const double coh_p =
            static_cast<double>(coherence(m, ctx.r, pos.r, ex.pos_extra, &pos_pair));
        const double coh_n =
            static_cast<double>(coherence(m, ctx.r, neg.r, ex.neg_extra, &neg_pair));

        const double p = std::clamp(coh_p, kProbClamp, 1.0 - kProbClamp);
        const double q = std::clamp(coh_n, kProbClamp, 1.0 - kProbClamp);
        result.data += -(std::log(p) + std::log(1.0 - q));

        // d/dlogit of -log sigma(s) is sigma(s)-1; of -log(1-sigma(s)) is
        // sigma(s). Where the clamp is active the loss is flat.
        const double dl_pos = (coh_p > kProbClamp && coh_p < 1.0 - kProbClamp) ? coh_p - 1.0 : 0.0;
        const double dl_neg = (coh_n > kProbClamp && coh_n < 1.0 - kProbClamp) ? coh_n : 0.0;

        std::vector<S> dctx(static_cast<size_t>(m.hp.event_repr), S(0));
        std::vector<S> dpos(static_cast<size_t>(m.hp.event_repr), S(0));
        std::vector<S> dneg(static_cast<size_t>(m.hp.event_repr), S(0));
        if (dl_pos != 0.0)
            detail::backprop_pair(m, pos_pair, static_cast<S>(dl_pos * inv_m), result.grads, dctx,
                                  dpos);
        if (dl_neg != 0.0)
            detail::backprop_pair(m, neg_pair, static_cast<S>(dl_neg * inv_m), result.grads, dctx,
                                  dneg);
        detail::backprop_compose(m, pos, dpos, result.grads);
        detail::backprop_compose(m, neg, dneg, result.grads);
        detail::backprop_compose(m, ctx, dctx, result.grads);
    }
    result.data *= inv_m;

    if (l2 > 0) {
        auto reg_mat = [&](const Mat<S>& W, Mat<S>& gW) {
            double acc = 0;
            for (size_t i = 0; i < W.a.size(); ++i) {
                acc += static_cast<double>(W.a[i]) * W.a[i];
                gW.a[i] += static_cast<S>(l2) * W.a[i];
            }
            return acc;
        };
        double sq = 0;
        sq += reg_mat(m.arg1.W, result.grads.arg1W);
        sq += reg_mat(m.arg2.W, result.grads.arg2W);
        sq += reg_mat(m.pair1.W, result.grads.pair1W);
        sq += reg_mat(m.pair2.W, result.grads.pair2W);
        sq += reg_mat(m.out.W, result.grads.outW);
        result.reg = 0.5 * l2 * sq;
    }
    result.total = result.data + result.reg;
    return result;
}

// ---------------------------------------------------------------------------
// Training: plain SGD over shuffled batches; embeddings are fine-tuned unless
// frozen, and only rows appearing in a batch are ever touched.

struct TrainResult {
    EventCompModel model;
    std::vector<double> epoch_data_loss;
    std::vector<double> epoch_total_loss;
};

inline EventCompModel make_model(const embeddings::EmbeddingTable& init,
                                 const EventCompHyperParams& hp_in, const SalienceMask& mask,
                                 uint64_t seed, const std::string& tag = "eventcomp") {
    EventCompHyperParams hp = hp_in;
    hp.dim = init.dim;
    EventCompModel m;
    m.hp = hp;
    m.mask = mask;
    m.vocab = init.vocab;
    m.tag = tag;
    m.build(init.vocab.size());
    for (size_t i = 0; i < init.input.size(); ++i) m.embeddings.a[i] = init.input[i];
    Rng rng(seed);
    m.init_weights(rng);
    m.check_shapes();
    return m;
}

inline TrainResult train(const std::vector<TripleRecord>& records, const TrainParams& params,
                         const embeddings::EmbeddingTable& init_embeddings,
                         const EventCompHyperParams& hp, const SalienceMask& mask,
                         const std::string& tag = "eventcomp") {
    if (records.empty()) throw ContractError("train: empty triple stream");
    if (params.lr <= 0 || params.batch_size <= 0 || params.epochs < 0 || params.l2 < 0)
        throw ContractError("train: invalid parameters");

    TrainResult result;
    result.model = make_model(init_embeddings, hp, mask, params.seed, tag);
    EventCompModel& m = result.model;

    std::vector<TrainingExample<float>> examples;
    examples.reserve(records.size());
    for (const TripleRecord& r : records)
        examples.push_back(decode_example<float>(r, mask, hp.raw_salience));

    Rng rng(params.seed ^ 0xd1b54a32d192ed03ull);
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    const float lr = static_cast<float>(params.lr);
    std::vector<TrainingExample<float>> batch;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_data = 0, epoch_total = 0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += params.batch_size) {
            const size_t end = std::min(order.size(), start + params.batch_size);
            batch.clear();
            for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
            BatchLossResult<float> loss = batch_loss(m, batch, params.l2);
            if (!std::isfinite(loss.total))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            epoch_data += loss.data * static_cast<double>(batch.size());
            epoch_total += loss.total * static_cast<double>(batch.size());
            seen += batch.size();

            auto step_mat = [&](Mat<float>& W, const Mat<float>& g) {
                for (size_t i = 0; i < W.a.size(); ++i) W.a[i] -= lr * g.a[i];
            };
            auto step_vec = [&](std::vector<float>& b, const std::vector<float>& g) {
                for (size_t i = 0; i < b.size(); ++i) b[i] -= lr * g[i];
            };
            step_mat(m.arg1.W, loss.grads.arg1W);
            step_vec(m.arg1.b, loss.grads.arg1b);
            step_mat(m.arg2.W, loss.grads.arg2W);
            step_vec(m.arg2.b, loss.grads.arg2b);
            step_mat(m.pair1.W, loss.grads.pair1W);
            step_vec(m.pair1.b, loss.grads.pair1b);
            step_mat(m.pair2.W, loss.grads.pair2W);
            step_vec(m.pair2.b, loss.grads.pair2b);
            step_mat(m.out.W, loss.grads.outW);
            step_vec(m.out.b, loss.grads.outb);
            if (!params.freeze_embeddings) {
                for (const auto& [id, g] : loss.grads.embed) {
                    float* row = m.embeddings.row(id);
                    for (int q = 0; q < m.hp.dim; ++q) row[q] -= lr * g[static_cast<size_t>(q)];
                }
            }
        }
        result.epoch_data_loss.push_back(epoch_data / static_cast<double>(seen));
        result.epoch_total_loss.push_back(epoch_total / static_cast<double>(seen));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Gradient verification against central finite differences.

struct GradCheckEntry {
    std::string param;
    double analytic = 0;
    double numeric = 0;
    double rel_err = 0;
};

struct GradCheckReport {
    double max_rel_err = 0;
    std::string worst_param;
    size_t checked = 0;
    bool pass = false;
    std::vector<GradCheckEntry> failures;
};

namespace detail {

inline double relative_error(double a, double n) {
    const double denom = std::max({std::fabs(a), std::fabs(n), 1e-5});
    return std::fabs(a - n) / denom;
}

}  // namespace detail

// Compares the supplied analytic gradients parameter-wise against central
// differences of the batch loss. Exposed separately so a deliberately
// corrupted gradient can be shown to fail.
inline GradCheckReport gradient_check_against(EventCompModelT<double>& m,
                                              const std::vector<TrainingExample<double>>& batch,
                                              const Gradients<double>& analytic, double l2,
                                              double step, double tolerance) {
    GradCheckReport report;
    auto loss_at = [&]() { return batch_loss(m, batch, l2).total; };

    auto probe = [&](double& param, double analytic_g, const std::string& name) {
        const double saved = param;
        param = saved + step;
        const double plus = loss_at();
        param = saved - step;
        const double minus = loss_at();
        param = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double err = detail::relative_error(analytic_g, numeric);
        ++report.checked;
        if (err > report.max_rel_err) {
            report.max_rel_err = err;
            report.worst_param = name;
        }
        if (err > tolerance)
            report.failures.push_back({name, analytic_g, numeric, err});
    };

    auto probe_dense = [&](Dense<double>& layer, const Mat<double>& gW,
                           const std::vector<double>& gb, const std::string& name) {
        for (int i = 0; i < layer.out(); ++i) {
            for (int j = 0; j < layer.in(); ++j)
                probe(layer.W.at(i, j), gW.at(i, j),
                      name + ".W[" + std::to_string(i) + "," + std::to_string(j) + "]");
            probe(layer.b[static_cast<size_t>(i)], gb[static_cast<size_t>(i)],
                  name + ".b[" + std::to_string(i) + "]");
        }
    };

    probe_dense(m.arg1, analytic.arg1W, analytic.arg1b, "arg1");
    probe_dense(m.arg2, analytic.arg2W, analytic.arg2b, "arg2");
    probe_dense(m.pair1, analytic.pair1W, analytic.pair1b, "pair1");
    probe_dense(m.pair2, analytic.pair2W, analytic.pair2b, "pair2");
    probe_dense(m.out, analytic.outW, analytic.outb, "out");

    for (int id = 0; id < m.embeddings.rows; ++id)
        for (int q = 0; q < m.embeddings.cols; ++q)
            probe(m.embeddings.a[static_cast<size_t>(id) * m.embeddings.cols + q],
                  analytic.embed_grad(id, q),
                  "embed[" + std::to_string(id) + "," + std::to_string(q) + "]");

    report.pass = report.max_rel_err < tolerance;
    return report;
}

inline GradCheckReport gradient_check(EventCompModelT<double>& m,
                                      const std::vector<TrainingExample<double>>& batch,
                                      double l2, double step = 1e-5, double tolerance = 1e-4) {
    const Gradients<double> analytic = batch_loss(m, batch, l2).grads;
    return gradient_check_against(m, batch, analytic, l2, step, tolerance);
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned manifest plus named parameter blocks. Canonical text
// form and an equivalent binary form (magic ECM1, little-endian float32).

namespace detail {

template <class S>
std::vector<std::pair<std::string, const Mat<S>*>> mat_blocks(const EventCompModelT<S>& m) {
    return {{"embeddings", &m.embeddings}, {"arg1.W", &m.arg1.W},   {"arg2.W", &m.arg2.W},
            {"pair1.W", &m.pair1.W},       {"pair2.W", &m.pair2.W}, {"out.W", &m.out.W}};
}

template <class S>
std::vector<std::pair<std::string, const std::vector<S>*>> vec_blocks(
    const EventCompModelT<S>& m) {
    return {{"arg1.b", &m.arg1.b},
            {"arg2.b", &m.arg2.b},
            {"pair1.b", &m.pair1.b},
            {"pair2.b", &m.pair2.b},
            {"out.b", &m.out.b}};
}

inline nlohmann::json manifest_json(const EventCompModel& m, const std::string& config_echo) {
    nlohmann::json j;
    j["format"] = kCheckpointVersion;
    j["tag"] = m.tag;
    j["hyperparams"] = {{"dim", m.hp.dim},
                        {"arg_hidden", m.hp.arg_hidden},
                        {"event_repr", m.hp.event_repr},
                        {"pair_hidden1", m.hp.pair_hidden1},
                        {"pair_hidden2", m.hp.pair_hidden2},
                        {"activation", to_string(m.hp.activation)},
                        {"raw_salience", m.hp.raw_salience}};
    j["salience_mask"] = {{"1st_loc", m.mask.first_loc},
                          {"head_count", m.mask.head_count},
                          {"mentions", m.mask.mentions}};
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(m.vocab.content_hash()));
    j["vocab_hash"] = hash;
    j["vocab_size"] = m.vocab.size();
    if (!config_echo.empty()) j["config"] = config_echo;
    return j;
}

inline void apply_manifest(EventCompModel& m, const nlohmann::json& j) {
    const int version = j.at("format").get<int>();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto& hp = j.at("hyperparams");
    m.hp.dim = hp.at("dim").get<int>();
    m.hp.arg_hidden = hp.at("arg_hidden").get<int>();
    m.hp.event_repr = hp.at("event_repr").get<int>();
    m.hp.pair_hidden1 = hp.at("pair_hidden1").get<int>();
    m.hp.pair_hidden2 = hp.at("pair_hidden2").get<int>();
    m.hp.activation = activation_from(hp.at("activation").get<std::string>());
    m.hp.raw_salience = hp.value("raw_salience", false);
    const auto& mask = j.at("salience_mask");
    m.mask.first_loc = mask.at("1st_loc").get<bool>();
    m.mask.head_count = mask.at("head_count").get<bool>();
    m.mask.mentions = mask.at("mentions").get<bool>();
    m.tag = j.value("tag", std::string("eventcomp"));
}

inline void verify_vocab_hash(const nlohmann::json& manifest, const Vocabulary& vocab,
                              bool force) {
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(vocab.content_hash()));
    const std::string stored = manifest.value("vocab_hash", std::string());
    if (stored != hash && !force)
        throw FormatError("checkpoint vocabulary hash " + stored +
                          " does not match the supplied vocabulary (" + hash + ")");
}

}  // namespace detail

inline void save_checkpoint_text(const std::string& path, const EventCompModel& m,
                                 const std::string& config_echo = "") {
    atomic_write(path, [&](std::ostream& out) {
        out << kCheckpointHeader << "\n" << detail::manifest_json(m, config_echo).dump() << "\n";
        for (const auto& [name, mat] : detail::mat_blocks(m)) {
            out << "block " << name << " " << mat->rows << " " << mat->cols << "\n";
            for (int i = 0; i < mat->rows; ++i) {
                const float* row = mat->row(i);
                for (int j = 0; j < mat->cols; ++j) {
                    if (j) out << " ";
                    out << format_float(row[j]);
                }
                out << "\n";
            }
        }
        for (const auto& [name, vec] : detail::vec_blocks(m)) {
            out << "block " << name << " 1 " << vec->size() << "\n";
            for (size_t j = 0; j < vec->size(); ++j) {
                if (j) out << " ";
                out << format_float((*vec)[j]);
            }
            out << "\n";
        }
    });
}

inline void save_checkpoint_binary(const std::string& path, const EventCompModel& m,
                                   const std::string& config_echo = "") {
    static_assert(std::endian::native == std::endian::little,
                  "binary checkpoint format assumes a little-endian host");
    atomic_write(path, [&](std::ostream& out) {
        out.write(kCheckpointMagic, 4);
        embeddings::detail::put_u32(out, kCheckpointVersion);
        const std::string manifest = detail::manifest_json(m, config_echo).dump();
        embeddings::detail::put_u32(out, static_cast<uint32_t>(manifest.size()));
        out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
        auto write_block = [&](const std::string& name, const float* data, uint32_t rows,
                               uint32_t cols) {
            embeddings::detail::put_u32(out, static_cast<uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            embeddings::detail::put_u32(out, rows);
            embeddings::detail::put_u32(out, cols);
            out.write(reinterpret_cast<const char*>(data),
                      static_cast<std::streamsize>(static_cast<size_t>(rows) * cols *
                                                   sizeof(float)));
        };
        for (const auto& [name, mat] : detail::mat_blocks(m))
            write_block(name, mat->a.data(), static_cast<uint32_t>(mat->rows),
                        static_cast<uint32_t>(mat->cols));
        for (const auto& [name, vec] : detail::vec_blocks(m))
            write_block(name, vec->data(), 1, static_cast<uint32_t>(vec->size()));
    });
}

inline EventCompModel load_checkpoint(const std::string& path, const Vocabulary& vocab,
                                      bool force = false) {
    std::ifstream in = open_input(path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in) throw FormatError("checkpoint " + path + ": truncated file");

    EventCompModel m;
    std::unordered_map<std::string, std::pair<std::vector<float>, std::pair<int, int>>> blocks;

    if (std::memcmp(magic, kCheckpointMagic, 4) == 0) {
        const uint32_t version = embeddings::detail::get_u32(in);
        if (version != static_cast<uint32_t>(kCheckpointVersion))
            throw FormatError("unsupported checkpoint version " + std::to_string(version));
        const uint32_t mlen = embeddings::detail::get_u32(in);
        std::string manifest_str(mlen, '\0');
        in.read(manifest_str.data(), mlen);
        if (!in) throw FormatError("checkpoint " + path + ": truncated manifest");
        nlohmann::json manifest = nlohmann::json::parse(manifest_str, nullptr, false);
        if (manifest.is_discarded())
            throw FormatError("checkpoint " + path + ": invalid manifest JSON");
        detail::verify_vocab_hash(manifest, vocab, force);
        detail::apply_manifest(m, manifest);
        while (true) {
            unsigned char peek[4];
            in.read(reinterpret_cast<char*>(peek), 4);
            if (in.gcount() == 0) break;
            if (in.gcount() != 4) throw FormatError("checkpoint " + path + ": truncated block");
            const uint32_t nlen = static_cast<uint32_t>(peek[0]) |
                                  (static_cast<uint32_t>(peek[1]) << 8) |
                                  (static_cast<uint32_t>(peek[2]) << 16) |
                                  (static_cast<uint32_t>(peek[3]) << 24);
            std::string name(nlen, '\0');
            in.read(name.data(), nlen);
            const uint32_t rows = embeddings::detail::get_u32(in);
            const uint32_t cols = embeddings::detail::get_u32(in);
            std::vector<float> data(static_cast<size_t>(rows) * cols);
            in.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(data.size() * sizeof(float)));
            if (!in) throw FormatError("checkpoint " + path + ": truncated block '" + name + "'");
            blocks[name] = {std::move(data), {static_cast<int>(rows), static_cast<int>(cols)}};
        }
    } else {
        in.seekg(0);
        std::string line;
        if (!std::getline(in, line) || !starts_with(line, kCheckpointHeader))
            throw FormatError("checkpoint " + path + ": missing header");
        if (!std::getline(in, line)) throw FormatError("checkpoint " + path + ": missing manifest");
        nlohmann::json manifest = nlohmann::json::parse(line, nullptr, false);
        if (manifest.is_discarded())
            throw FormatError("checkpoint " + path + ": invalid manifest JSON");
        detail::verify_vocab_hash(manifest, vocab, force);
        detail::apply_manifest(m, manifest);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream head(line);
            std::string kw, name;
            int rows = 0, cols = 0;
            head >> kw >> name >> rows >> cols;
            if (kw != "block" || !head)
                throw FormatError("checkpoint " + path + ": malformed block header '" + line + "'");
            std::vector<float> data;
            data.reserve(static_cast<size_t>(rows) * cols);
            for (int i = 0; i < rows; ++i) {
                if (!std::getline(in, line))
                    throw FormatError("checkpoint " + path + ": truncated block '" + name + "'");
                std::istringstream ss(line);
                float v;
                while (ss >> v) data.push_back(v);
            }
            if (data.size() != static_cast<size_t>(rows) * cols)
                throw FormatError("checkpoint " + path + ": block '" + name +
                                  "' has wrong element count");
            blocks[name] = {std::move(data), {rows, cols}};
        }
    }

    m.vocab = vocab;
    m.build(vocab.size());
    auto take_mat = [&](const std::string& name, Mat<float>& dst) {
        auto it = blocks.find(name);
        if (it == blocks.end())
            throw FormatError("checkpoint " + path + ": missing block '" + name + "'");
        const auto& [data, shape] = it->second;
        if (shape.first != dst.rows || shape.second != dst.cols)
            throw FormatError("checkpoint " + path + ": block '" + name + "' has shape " +
                              std::to_string(shape.first) + "x" + std::to_string(shape.second) +
                              ", expected " + std::to_string(dst.rows) + "x" +
                              std::to_string(dst.cols));
        dst.a = data;
    };
    auto take_vec = [&](const std::string& name, std::vector<float>& dst) {
        auto it = blocks.find(name);
        if (it == blocks.end())
            throw FormatError("checkpoint " + path + ": missing block '" + name + "'");
        const auto& [data, shape] = it->second;
        if (static_cast<size_t>(shape.first) * shape.second != dst.size())
            throw FormatError("checkpoint " + path + ": block '" + name + "' has wrong size");
        dst = data;
    };
    take_mat("embeddings", m.embeddings);
    take_mat("arg1.W", m.arg1.W);
    take_vec("arg1.b", m.arg1.b);
    take_mat("arg2.W", m.arg2.W);
    take_vec("arg2.b", m.arg2.b);
    take_mat("pair1.W", m.pair1.W);
    take_vec("pair1.b", m.pair1.b);
    take_mat("pair2.W", m.pair2.W);
    take_vec("pair2.b", m.pair2.b);
    take_mat("out.W", m.out.W);
    take_vec("out.b", m.out.b);
    m.check_shapes();
    return m;
}

}  // namespace evimp::eventcomp
