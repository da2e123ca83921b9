#ifndef FPLAB_VOCAB_HPP
#define FPLAB_VOCAB_HPP

#include <string>
#include <unordered_map>
#include <vector>

namespace fplab {

enum class TokenizerKind { Word, Char };

// Token ids 0..V-3 are corpus tokens in descending frequency order (ties by
// lexicographic order), followed by <unk> and <bos>.
struct Vocab {
    std::vector<std::string> tokens;
    int unk_id = -1;
    int bos_id = -1;
    TokenizerKind kind = TokenizerKind::Word;

    int size() const { return static_cast<int>(tokens.size()); }
    int n_regular() const { return size() - 2; }

    int id_of(const std::string& tok) const;
    const std::string& token(int id) const { return tokens.at(static_cast<size_t>(id)); }

    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids, const std::string& sep = " ") const;

private:
    mutable std::unordered_map<std::string, int> index_;
    void build_index() const;
};

/// Splits text on whitespace (word mode) or into single characters excluding
/// whitespace (char mode).
std::vector<std::string> split_tokens(const std::string& text, TokenizerKind kind);

/// Builds a vocabulary from corpus text. At most max_vocab total entries,
/// two of which are <unk> and <bos>. Throws on an empty corpus.
Vocab build_vocab(const std::string& corpus_text, int max_vocab,
                  TokenizerKind kind = TokenizerKind::Word);

}  // namespace fplab

#endif
