#ifndef FPLAB_LM_HPP
#define FPLAB_LM_HPP

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "fplab/vocab.hpp"

namespace fplab {

// Fixed-window neural language model: embed -> concat -> tanh hidden ->
// logits. All state is double precision and every operation is a pure
// function of its inputs and an explicit seed.

struct LmConfig {
    int context_window = 8;  // c: tokens of conditioning
    int embed_dim = 32;      // d
    int hidden_dim = 128;    // h
    int vocab_size = 2000;   // V

    void validate() const;
    bool operator==(const LmConfig&) const = default;
};

struct LmParams {
    LmConfig config;
    Eigen::MatrixXd embedding;      // V x d
    Eigen::MatrixXd hidden_weight;  // (c*d) x h
    Eigen::VectorXd hidden_bias;    // h
    Eigen::MatrixXd out_weight;     // h x V
    Eigen::VectorXd out_bias;       // V

    long n_coeffs() const;
    /// Flattened copy of every tensor, in declaration order, row-major.
    Eigen::VectorXd flatten() const;
    static LmParams unflatten(const LmConfig& cfg, const Eigen::VectorXd& theta);
};

/// Zero-valued tensors of the right shapes.
LmParams zeros_like(const LmConfig& cfg);

/// Seeded uniform(-0.05, 0.05) initialization.
LmParams init_params(const LmConfig& cfg, uint64_t seed);

/// Hex SHA-256 of the canonical parameter serialization.
std::string model_digest(const LmParams& params);

// ---------------------------------------------------------------------------
// Batches

struct TokenBatch {
    std::vector<std::vector<int>> sequences;
    bool empty() const { return sequences.empty(); }
    long n_positions() const;
};

/// One scored prediction site: a fixed-length context, a (soft) target
/// distribution over tokens, and a loss weight.
struct PositionBatch {
    std::vector<std::vector<int>> contexts;               // each of length c
    std::vector<std::vector<std::pair<int, double>>> targets;  // (token, prob), probs sum to 1
    std::vector<double> weights;                          // per-position loss weights

    size_t size() const { return contexts.size(); }
    void add(std::vector<int> context, int target, double weight);
    void add_soft(std::vector<int> context, std::vector<std::pair<int, double>> target, double weight);
};

/// Last min(c, |prefix|) tokens of prefix, left-padded with bos to length c.
std::vector<int> context_from_prefix(const std::vector<int>& prefix, int c, int bos_id);

/// Expands full sequences into one prediction site per token position, each
/// with weight 1/(total positions).
PositionBatch positions_from_batch(const TokenBatch& batch, const LmConfig& cfg, int bos_id);

// ---------------------------------------------------------------------------
// Forward / loss / gradient

/// Logits for the next token given exactly c context ids.
Eigen::VectorXd forward_logits(const LmParams& params, const std::vector<int>& context);

/// softmax(logits / T); throws if T <= 0.
Eigen::VectorXd softmax_temperature(const Eigen::VectorXd& logits, double temperature);

/// Next-token distribution at the given temperature for an arbitrary prefix
/// (conditioning on its last c tokens, bos-padded).
Eigen::VectorXd next_token_dist(const LmParams& params, const std::vector<int>& prefix,
                                double temperature, int bos_id);

struct LossGrad {
    double loss = 0.0;
    LmParams grad;  // same shapes as the parameters
};

/// Weighted cross-entropy and its exact analytic gradient over prediction
/// sites. loss = sum_i w_i * CE_i.
LossGrad loss_and_grad_positions(const LmParams& params, const PositionBatch& batch);

/// Mean cross-entropy over all token positions of the batch, with gradient.
LossGrad loss_and_grad(const LmParams& params, const TokenBatch& batch, int bos_id);

/// Forward-only weighted cross-entropy (sum_i w_i * CE_i).
double loss_positions(const LmParams& params, const PositionBatch& batch);

/// Forward-only mean cross-entropy over the batch.
double mean_cross_entropy(const LmParams& params, const TokenBatch& batch, int bos_id);

/// exp(mean cross-entropy) over the evaluation batch.
double held_out_perplexity(const LmParams& params, const TokenBatch& batch, int bos_id);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamState {
    LmParams m;  // first moments
    LmParams v;  // second moments
    long step = 0;
    static AdamState init(const LmConfig& cfg);
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One standard Adam update with bias correction, in place.
void adam_step(LmParams& params, const LmParams& grad, AdamState& state, double learning_rate,
               const AdamConfig& adam = {});

// ---------------------------------------------------------------------------
// Decoding

/// Ancestral sampling at temperature T; deterministic given the seed.
std::vector<int> sample(const LmParams& params, const std::vector<int>& prefix, int length,
                        double temperature, uint64_t seed, int bos_id);

/// Argmax decoding; ties break toward the lowest token id.
std::vector<int> greedy_decode(const LmParams& params, const std::vector<int>& prefix, int length,
                               int bos_id);

/// Sum over positions of log p(token | context).
double sequence_log_prob(const LmParams& params, const std::vector<int>& tokens, int bos_id);

// ---------------------------------------------------------------------------
// Base training

struct TrainCurveRow {
    int epoch = 0;
    double train_loss = 0.0;
    double heldout_ppl = 0.0;
};

struct TrainBaseResult {
    LmParams params;
    std::vector<TrainCurveRow> curve;
    double initial_heldout_ppl = 0.0;
};

/// Mini-batch Adam over sliding windows of the corpus. Throws if the corpus
/// has fewer than c+1 tokens.
TrainBaseResult train_base(const std::vector<int>& corpus_tokens, const LmConfig& cfg, int epochs,
                           double learning_rate, uint64_t seed, int bos_id,
                           const std::vector<int>& heldout_tokens = {}, int batch_size = 128);

// ---------------------------------------------------------------------------
// Model bundle and fplm-v1 file format

struct Model {
    LmParams params;
    Vocab vocab;
};

/// Writes the "fplm-v1" document: format tag, config, vocab token list, and
/// each tensor as a flat row-major array of decimal doubles. Loading the
/// written file reproduces the model bit-exactly.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace fplab

#endif
