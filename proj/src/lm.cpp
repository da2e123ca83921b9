#include "fplab/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "fplab/rng.hpp"
#include "fplab/sha256.hpp"

namespace fplab {

using json = nlohmann::json;

void LmConfig::validate() const {
    if (context_window < 1 || embed_dim < 1 || hidden_dim < 1 || vocab_size < 1)
        throw std::invalid_argument("LmConfig: all dimensions must be >= 1");
}

long LmParams::n_coeffs() const {
    return embedding.size() + hidden_weight.size() + hidden_bias.size() + out_weight.size() +
           out_bias.size();
}

namespace {

template <typename Fn>
void for_each_tensor(LmParams& p, Fn&& fn) {
    fn(p.embedding);
    fn(p.hidden_weight);
    fn(p.hidden_bias);
    fn(p.out_weight);
    fn(p.out_bias);
}

template <typename Fn>
void for_each_tensor(const LmParams& p, Fn&& fn) {
    fn(p.embedding);
    fn(p.hidden_weight);
    fn(p.hidden_bias);
    fn(p.out_weight);
    fn(p.out_bias);
}

void check_token(int id, int vocab_size) {
    if (id < 0 || id >= vocab_size) throw std::out_of_range("token id out of vocabulary range");
}

}  // namespace

Eigen::VectorXd LmParams::flatten() const {
    Eigen::VectorXd theta(n_coeffs());
    long off = 0;
    for_each_tensor(*this, [&](const auto& t) {
        for (long r = 0; r < t.rows(); ++r)
            for (long c = 0; c < t.cols(); ++c) theta[off++] = t(r, c);
    });
    return theta;
}

LmParams unflatten_into(const LmConfig& cfg, const Eigen::VectorXd& theta) {
    LmParams p = zeros_like(cfg);
    long off = 0;
    for_each_tensor(p, [&](auto& t) {
        for (long r = 0; r < t.rows(); ++r)
            for (long c = 0; c < t.cols(); ++c) t(r, c) = theta[off++];
    });
    if (off != theta.size()) throw std::invalid_argument("unflatten: size mismatch");
    return p;
}

LmParams LmParams::unflatten(const LmConfig& cfg, const Eigen::VectorXd& theta) {
    return unflatten_into(cfg, theta);
}

LmParams zeros_like(const LmConfig& cfg) {
    cfg.validate();
    LmParams p;
    p.config = cfg;
    p.embedding = Eigen::MatrixXd::Zero(cfg.vocab_size, cfg.embed_dim);
    p.hidden_weight = Eigen::MatrixXd::Zero(static_cast<long>(cfg.context_window) * cfg.embed_dim,
                                            cfg.hidden_dim);
    p.hidden_bias = Eigen::VectorXd::Zero(cfg.hidden_dim);
    p.out_weight = Eigen::MatrixXd::Zero(cfg.hidden_dim, cfg.vocab_size);
    p.out_bias = Eigen::VectorXd::Zero(cfg.vocab_size);
    return p;
}

LmParams init_params(const LmConfig& cfg, uint64_t seed) {
    LmParams p = zeros_like(cfg);
    Rng rng(seed);
    for_each_tensor(p, [&](auto& t) {
        for (long r = 0; r < t.rows(); ++r)
            for (long c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-0.05, 0.05);
    });
    return p;
}

std::string model_digest(const LmParams& params) {
    std::string bytes;
    bytes.reserve(static_cast<size_t>(params.n_coeffs()) * 8 + 16);
    const auto push_i32 = [&](int v) { bytes += encode_token_ids({v}); };
    push_i32(params.config.context_window);
    push_i32(params.config.embed_dim);
    push_i32(params.config.hidden_dim);
    push_i32(params.config.vocab_size);
    for_each_tensor(params, [&](const auto& t) {
        for (long r = 0; r < t.rows(); ++r)
            for (long c = 0; c < t.cols(); ++c) {
                const double x = t(r, c);
                uint64_t u;
                static_assert(sizeof(u) == sizeof(x));
                std::memcpy(&u, &x, 8);
                bytes += be64(u);
            }
    });
    return to_hex(sha256(bytes));
}

// ---------------------------------------------------------------------------

long TokenBatch::n_positions() const {
    long n = 0;
    for (const auto& s : sequences) n += static_cast<long>(s.size());
    return n;
}

void PositionBatch::add(std::vector<int> context, int target, double weight) {
    contexts.push_back(std::move(context));
    targets.push_back({{target, 1.0}});
    weights.push_back(weight);
}

void PositionBatch::add_soft(std::vector<int> context, std::vector<std::pair<int, double>> target,
                             double weight) {
    contexts.push_back(std::move(context));
    targets.push_back(std::move(target));
    weights.push_back(weight);
}

std::vector<int> context_from_prefix(const std::vector<int>& prefix, int c, int bos_id) {
    std::vector<int> ctx(static_cast<size_t>(c), bos_id);
    const size_t take = std::min(prefix.size(), static_cast<size_t>(c));
    for (size_t i = 0; i < take; ++i)
        ctx[static_cast<size_t>(c) - take + i] = prefix[prefix.size() - take + i];
    return ctx;
}

PositionBatch positions_from_batch(const TokenBatch& batch, const LmConfig& cfg, int bos_id) {
    PositionBatch pb;
    const long total = batch.n_positions();
    if (total == 0) return pb;
    const double w = 1.0 / static_cast<double>(total);
    for (const auto& seq : batch.sequences) {
        std::vector<int> prefix;
        prefix.reserve(seq.size());
        for (int tok : seq) {
            pb.add(context_from_prefix(prefix, cfg.context_window, bos_id), tok, w);
            prefix.push_back(tok);
        }
    }
    return pb;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd forward_logits(const LmParams& params, const std::vector<int>& context) {
    const auto& cfg = params.config;
    if (static_cast<int>(context.size()) != cfg.context_window)
        throw std::invalid_argument("context length must equal the context window");
    Eigen::VectorXd x(static_cast<long>(cfg.context_window) * cfg.embed_dim);
    for (int i = 0; i < cfg.context_window; ++i) {
        check_token(context[static_cast<size_t>(i)], cfg.vocab_size);
        x.segment(static_cast<long>(i) * cfg.embed_dim, cfg.embed_dim) =
            params.embedding.row(context[static_cast<size_t>(i)]).transpose();
    }
    const Eigen::VectorXd hidden =
        (params.hidden_weight.transpose() * x + params.hidden_bias).array().tanh();
    return params.out_weight.transpose() * hidden + params.out_bias;
}

Eigen::VectorXd softmax_temperature(const Eigen::VectorXd& logits, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    Eigen::VectorXd z = logits / temperature;
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

Eigen::VectorXd next_token_dist(const LmParams& params, const std::vector<int>& prefix,
                                double temperature, int bos_id) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    for (int id : prefix) check_token(id, params.config.vocab_size);
    const auto ctx = context_from_prefix(prefix, params.config.context_window, bos_id);
    return softmax_temperature(forward_logits(params, ctx), temperature);
}

namespace {

constexpr long kChunkRows = 512;

// Shared batched forward/backward. When grad_out is null only the loss is
// computed. Positions are processed in chunks to bound the n x V buffers.
double run_positions(const LmParams& params, const PositionBatch& batch, LmParams* grad_out) {
    const auto& cfg = params.config;
    const long n = static_cast<long>(batch.size());
    const long cd = static_cast<long>(cfg.context_window) * cfg.embed_dim;
    double total_loss = 0.0;

    for (long begin = 0; begin < n; begin += kChunkRows) {
        const long rows = std::min(kChunkRows, n - begin);

        Eigen::MatrixXd x(rows, cd);
        for (long i = 0; i < rows; ++i) {
            const auto& ctx = batch.contexts[static_cast<size_t>(begin + i)];
            if (static_cast<int>(ctx.size()) != cfg.context_window)
                throw std::invalid_argument("context length must equal the context window");
            for (int j = 0; j < cfg.context_window; ++j) {
                check_token(ctx[static_cast<size_t>(j)], cfg.vocab_size);
                x.block(i, static_cast<long>(j) * cfg.embed_dim, 1, cfg.embed_dim) =
                    params.embedding.row(ctx[static_cast<size_t>(j)]);
            }
        }

        Eigen::MatrixXd hidden = ((x * params.hidden_weight).rowwise() +
                                  params.hidden_bias.transpose())
                                     .array()
                                     .tanh();
        Eigen::MatrixXd logits =
            (hidden * params.out_weight).rowwise() + params.out_bias.transpose();

        // Row-wise log-softmax, loss, and (optionally) dZ = w * (softmax - target).
        Eigen::MatrixXd dz;
        if (grad_out) dz.resize(rows, cfg.vocab_size);
        for (long i = 0; i < rows; ++i) {
            const double m = logits.row(i).maxCoeff();
            const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - m;
            const Eigen::ArrayXd ex = shifted.exp();
            const double sum = ex.sum();
            const double lse = m + std::log(sum);
            const double w = batch.weights[static_cast<size_t>(begin + i)];
            double ce = 0.0;
            for (const auto& [tok, prob] : batch.targets[static_cast<size_t>(begin + i)]) {
                check_token(tok, cfg.vocab_size);
                ce -= prob * (logits(i, tok) - lse);
            }
            total_loss += w * ce;
            if (grad_out) {
                dz.row(i) = (ex / sum).matrix().transpose() * w;
                for (const auto& [tok, prob] : batch.targets[static_cast<size_t>(begin + i)])
                    dz(i, tok) -= w * prob;
            }
        }

        if (grad_out) {
            grad_out->out_weight.noalias() += hidden.transpose() * dz;
            grad_out->out_bias.noalias() += dz.colwise().sum().transpose();
            Eigen::MatrixXd dhidden_pre =
                ((dz * params.out_weight.transpose()).array() * (1.0 - hidden.array().square()))
                    .matrix();
            grad_out->hidden_weight.noalias() += x.transpose() * dhidden_pre;
            grad_out->hidden_bias.noalias() += dhidden_pre.colwise().sum().transpose();
            Eigen::MatrixXd dx = dhidden_pre * params.hidden_weight.transpose();
            for (long i = 0; i < rows; ++i) {
                const auto& ctx = batch.contexts[static_cast<size_t>(begin + i)];
                for (int j = 0; j < cfg.context_window; ++j)
                    grad_out->embedding.row(ctx[static_cast<size_t>(j)]) +=
                        dx.block(i, static_cast<long>(j) * cfg.embed_dim, 1, cfg.embed_dim);
            }
        }
    }
    return total_loss;
}

}  // namespace

LossGrad loss_and_grad_positions(const LmParams& params, const PositionBatch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("empty position batch");
    LossGrad out;
    out.grad = zeros_like(params.config);
    out.loss = run_positions(params, batch, &out.grad);
    return out;
}

LossGrad loss_and_grad(const LmParams& params, const TokenBatch& batch, int bos_id) {
    if (batch.empty() || batch.n_positions() == 0)
        throw std::invalid_argument("empty token batch");
    return loss_and_grad_positions(params, positions_from_batch(batch, params.config, bos_id));
}

double loss_positions(const LmParams& params, const PositionBatch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("empty position batch");
    return run_positions(params, batch, nullptr);
}

double mean_cross_entropy(const LmParams& params, const TokenBatch& batch, int bos_id) {
    if (batch.empty() || batch.n_positions() == 0)
        throw std::invalid_argument("empty token batch");
    return loss_positions(params, positions_from_batch(batch, params.config, bos_id));
}

double held_out_perplexity(const LmParams& params, const TokenBatch& batch, int bos_id) {
    return std::exp(mean_cross_entropy(params, batch, bos_id));
}

// ---------------------------------------------------------------------------

AdamState AdamState::init(const LmConfig& cfg) {
    AdamState s;
    s.m = zeros_like(cfg);
    s.v = zeros_like(cfg);
    s.step = 0;
    return s;
}

void adam_step(LmParams& params, const LmParams& grad, AdamState& state, double learning_rate,
               const AdamConfig& adam) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = adam.beta1 * m + (1.0 - adam.beta1) * g;
        v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
        p.array() -= learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam.epsilon);
    };
    update(params.embedding, grad.embedding, state.m.embedding, state.v.embedding);
    update(params.hidden_weight, grad.hidden_weight, state.m.hidden_weight, state.v.hidden_weight);
    update(params.hidden_bias, grad.hidden_bias, state.m.hidden_bias, state.v.hidden_bias);
    update(params.out_weight, grad.out_weight, state.m.out_weight, state.v.out_weight);
    update(params.out_bias, grad.out_bias, state.m.out_bias, state.v.out_bias);
}

// ---------------------------------------------------------------------------

std::vector<int> sample(const LmParams& params, const std::vector<int>& prefix, int length,
                        double temperature, uint64_t seed, int bos_id) {
    if (length < 0) throw std::invalid_argument("length must be >= 0");
    Rng rng(seed);
    std::vector<int> out;
    out.reserve(static_cast<size_t>(length));
    std::vector<int> running = prefix;
    for (int step = 0; step < length; ++step) {
        const Eigen::VectorXd probs = next_token_dist(params, running, temperature, bos_id);
        const double u = rng.uniform();
        double acc = 0.0;
        int tok = params.config.vocab_size - 1;
        for (int v = 0; v < params.config.vocab_size; ++v) {
            acc += probs[v];
            if (u < acc) {
                tok = v;
                break;
            }
        }
        out.push_back(tok);
        running.push_back(tok);
    }
    return out;
}

std::vector<int> greedy_decode(const LmParams& params, const std::vector<int>& prefix, int length,
                               int bos_id) {
    if (length < 0) throw std::invalid_argument("length must be >= 0");
    std::vector<int> out;
    out.reserve(static_cast<size_t>(length));
    std::vector<int> running = prefix;
    for (int step = 0; step < length; ++step) {
        const auto ctx = context_from_prefix(running, params.config.context_window, bos_id);
        for (int id : ctx) check_token(id, params.config.vocab_size);
        const Eigen::VectorXd logits = forward_logits(params, ctx);
        int best = 0;
        for (int v = 1; v < params.config.vocab_size; ++v)
            if (logits[v] > logits[best]) best = v;  // ties keep the lowest id
        out.push_back(best);
        running.push_back(best);
    }
    return out;
}

double sequence_log_prob(const LmParams& params, const std::vector<int>& tokens, int bos_id) {
    double total = 0.0;
    std::vector<int> prefix;
    prefix.reserve(tokens.size());
    for (int tok : tokens) {
        check_token(tok, params.config.vocab_size);
        const auto ctx = context_from_prefix(prefix, params.config.context_window, bos_id);
        const Eigen::VectorXd logits = forward_logits(params, ctx);
        const double m = logits.maxCoeff();
        const double lse = m + std::log((logits.array() - m).exp().sum());
        total += logits[tok] - lse;
        prefix.push_back(tok);
    }
    return total;
}

// ---------------------------------------------------------------------------

TrainBaseResult train_base(const std::vector<int>& corpus_tokens, const LmConfig& cfg, int epochs,
                           double learning_rate, uint64_t seed, int bos_id,
                           const std::vector<int>& heldout_tokens, int batch_size) {
    cfg.validate();
    const long n = static_cast<long>(corpus_tokens.size());
    if (n < cfg.context_window + 1)
        throw std::invalid_argument("corpus shorter than context_window + 1 tokens");
    for (int id : corpus_tokens) check_token(id, cfg.vocab_size);

    TrainBaseResult result;
    result.params = init_params(cfg, seed);
    AdamState state = AdamState::init(cfg);

    TokenBatch heldout;
    if (!heldout_tokens.empty()) heldout.sequences.push_back(heldout_tokens);
    result.initial_heldout_ppl =
        heldout.empty() ? 0.0 : held_out_perplexity(result.params, heldout, bos_id);

    std::vector<long> order(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        long seen = 0;
        for (long begin = 0; begin < n; begin += batch_size) {
            const long rows = std::min<long>(batch_size, n - begin);
            PositionBatch pb;
            for (long i = 0; i < rows; ++i) {
                const long pos = order[static_cast<size_t>(begin + i)];
                std::vector<int> ctx(static_cast<size_t>(cfg.context_window), bos_id);
                const long take = std::min<long>(cfg.context_window, pos);
                for (long j = 0; j < take; ++j)
                    ctx[static_cast<size_t>(cfg.context_window - take + j)] =
                        corpus_tokens[static_cast<size_t>(pos - take + j)];
                pb.add(std::move(ctx), corpus_tokens[static_cast<size_t>(pos)],
                       1.0 / static_cast<double>(rows));
            }
            const LossGrad lg = loss_and_grad_positions(result.params, pb);
            adam_step(result.params, lg.grad, state, learning_rate);
            epoch_loss += lg.loss * static_cast<double>(rows);
            seen += rows;
        }
        TrainCurveRow row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / static_cast<double>(seen);
        row.heldout_ppl =
            heldout.empty() ? 0.0 : held_out_perplexity(result.params, heldout, bos_id);
        result.curve.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace {

json tensor_to_json(const Eigen::MatrixXd& t) {
    json arr = json::array();
    for (long r = 0; r < t.rows(); ++r)
        for (long c = 0; c < t.cols(); ++c) arr.push_back(t(r, c));
    return arr;
}

void tensor_from_json(const json& arr, Eigen::Ref<Eigen::MatrixXd> t) {
    if (static_cast<long>(arr.size()) != t.size())
        throw std::runtime_error("model file: tensor size mismatch");
    long i = 0;
    for (long r = 0; r < t.rows(); ++r)
        for (long c = 0; c < t.cols(); ++c) t(r, c) = arr[static_cast<size_t>(i++)].get<double>();
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    const auto& cfg = model.params.config;
    if (cfg.vocab_size != model.vocab.size())
        throw std::invalid_argument("save_model: vocab size does not match config");
    json doc;
    doc["format"] = "fplm-v1";
    doc["config"] = {{"context_window", cfg.context_window},
                     {"embed_dim", cfg.embed_dim},
                     {"hidden_dim", cfg.hidden_dim},
                     {"vocab_size", cfg.vocab_size}};
    doc["vocab"] = {{"tokens", model.vocab.tokens},
                    {"unk_id", model.vocab.unk_id},
                    {"bos_id", model.vocab.bos_id},
                    {"kind", model.vocab.kind == TokenizerKind::Word ? "word" : "char"}};
    doc["params"] = {{"embedding", tensor_to_json(model.params.embedding)},
                     {"hidden_weight", tensor_to_json(model.params.hidden_weight)},
                     {"hidden_bias", tensor_to_json(model.params.hidden_bias)},
                     {"out_weight", tensor_to_json(model.params.out_weight)},
                     {"out_bias", tensor_to_json(model.params.out_bias)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << doc.dump() << "\n";
    if (!out) throw std::runtime_error("failed writing model file: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json doc;
    in >> doc;
    if (doc.value("format", "") != std::string("fplm-v1"))
        throw std::runtime_error("not an fplm-v1 model file: " + path);
    Model model;
    LmConfig cfg;
    cfg.context_window = doc["config"]["context_window"].get<int>();
    cfg.embed_dim = doc["config"]["embed_dim"].get<int>();
    cfg.hidden_dim = doc["config"]["hidden_dim"].get<int>();
    cfg.vocab_size = doc["config"]["vocab_size"].get<int>();
    cfg.validate();
    model.params = zeros_like(cfg);
    tensor_from_json(doc["params"]["embedding"], model.params.embedding);
    tensor_from_json(doc["params"]["hidden_weight"], model.params.hidden_weight);
    tensor_from_json(doc["params"]["hidden_bias"], model.params.hidden_bias);
    tensor_from_json(doc["params"]["out_weight"], model.params.out_weight);
    tensor_from_json(doc["params"]["out_bias"], model.params.out_bias);
    model.vocab.tokens = doc["vocab"]["tokens"].get<std::vector<std::string>>();
    model.vocab.unk_id = doc["vocab"]["unk_id"].get<int>();
    model.vocab.bos_id = doc["vocab"]["bos_id"].get<int>();
    model.vocab.kind =
        doc["vocab"]["kind"].get<std::string>() == "char" ? TokenizerKind::Char : TokenizerKind::Word;
    if (model.vocab.size() != cfg.vocab_size)
        throw std::runtime_error("model file: vocab/config size mismatch");
    return model;
}

}  // namespace fplab
