#ifndef FPLAB_FINGERPRINT_HPP
#define FPLAB_FINGERPRINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fplab/lm.hpp"

namespace fplab {

enum class Scheme { Perinucleus, Random, EnglishRandom };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct Fingerprint {
    std::vector<int> key;
    std::vector<int> response;
    Scheme scheme = Scheme::Perinucleus;
    double t = 0.0;                // nucleus threshold (perinucleus only)
    int k = 0;                     // perinucleus width
    uint64_t choice_digest = 0;    // hash value behind the response pick
};

struct FingerprintSet {
    std::vector<Fingerprint> fingerprints;
    std::string secret;            // chain-hash secret (kept out of the file form)
    std::string base_model_digest;
    double key_temperature = 0.0;

    size_t size() const { return fingerprints.size(); }
};

// ---------------------------------------------------------------------------
// Key generation

struct KeyGenConfig {
    int lexicon_size = 200;   // first token drawn from this many most-frequent tokens
    int key_len = 16;
    double temperature = 0.5;
};

/// First token uniform over the lexicon_size most frequent corpus tokens
/// (ids [0, lexicon_size)); the rest sampled from the base model at the given
/// temperature.
std::vector<int> gen_key(const LmParams& base, int lexicon_size, int key_len, double temperature,
                         uint64_t seed, int bos_id);

// ---------------------------------------------------------------------------
// Perinucleus sampling

struct PerinucleusWindow {
    int boundary = 0;              // b: smallest descending-order rank with CDF(b) >= t
    std::vector<int> candidates;   // token ids at ranks b+1 .. b+k
};

/// Descending-probability order (ties toward the lower token id) and the
/// k-token window just outside the top-t nucleus. Throws when b + k would
/// exceed the last valid rank.
PerinucleusWindow perinucleus_window(const Eigen::VectorXd& probs, double t, int k);

/// The chain-hash pick: r = (first 8 bytes of SHA-256(secret || key ids) mod k) + 1,
/// response token = rank b + r. For L > 1 the remaining tokens are greedy
/// continuations of key + response prefix.
Fingerprint perinucleus_response(const LmParams& base, const std::vector<int>& key, double t,
                                 int k, int response_len, const std::string& secret, int bos_id);

/// n_resp distinct single-token responses drawn without replacement from the
/// perinucleus window, derived from the same chain hash. The first entry
/// always equals the single-response pick.
std::vector<int> multi_response(const LmParams& base, const std::vector<int>& key, double t, int k,
                                int n_resp, const std::string& secret, int bos_id);

// ---------------------------------------------------------------------------
// Set generators

struct PerinucleusConfig {
    KeyGenConfig key;
    double t = 0.8;
    int k = 3;
    int response_len = 1;
};

FingerprintSet gen_perinucleus_fp(const LmParams& base, int count, const PerinucleusConfig& cfg,
                                  const std::string& secret, uint64_t seed, int bos_id);

/// RANDOM baseline: keys and responses uniform over non-special token ids.
FingerprintSet gen_random_fp(int count, int key_len, int n_regular_tokens, uint64_t seed,
                             int response_len = 1);

/// ENGLISH-RANDOM baseline: keys from gen_key, responses uniform over
/// non-special token ids.
FingerprintSet gen_english_random_fp(const LmParams& base, int count, const KeyGenConfig& key_cfg,
                                     uint64_t seed, int bos_id, int response_len = 1);

// ---------------------------------------------------------------------------
// Metrics and I/O

/// -(1/M) * sum_i sequence_log_prob(base, key_i).
double key_log_perplexity(const LmParams& base, const FingerprintSet& set, int bos_id);

/// Line-delimited records with a header carrying the secret digest (never the
/// secret itself) and the base-model digest.
void save_fingerprints(const FingerprintSet& set, const std::string& path);
FingerprintSet load_fingerprints(const std::string& path);  // secret comes back empty

}  // namespace fplab

#endif
