#include "fplab/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace fplab {

std::vector<std::string> split_tokens(const std::string& text, TokenizerKind kind) {
    std::vector<std::string> out;
    if (kind == TokenizerKind::Char) {
        for (char ch : text)
            if (!std::isspace(static_cast<unsigned char>(ch))) out.emplace_back(1, ch);
        return out;
    }
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocab build_vocab(const std::string& corpus_text, int max_vocab, TokenizerKind kind) {
    if (max_vocab < 3) throw std::invalid_argument("max_vocab must be at least 3");
    const auto words = split_tokens(corpus_text, kind);
    if (words.empty()) throw std::invalid_argument("empty corpus");

    std::map<std::string, long> counts;  // ordered map gives the lexicographic tie-break
    for (const auto& w : words) ++counts[w];

    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v;
    v.kind = kind;
    const size_t keep = std::min(ranked.size(), static_cast<size_t>(max_vocab - 2));
    v.tokens.reserve(keep + 2);
    for (size_t i = 0; i < keep; ++i) v.tokens.push_back(ranked[i].first);
    v.unk_id = static_cast<int>(v.tokens.size());
    v.tokens.push_back("<unk>");
    v.bos_id = static_cast<int>(v.tokens.size());
    v.tokens.push_back("<bos>");
    return v;
}

void Vocab::build_index() const {
    index_.reserve(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) index_[tokens[i]] = static_cast<int>(i);
}

int Vocab::id_of(const std::string& tok) const {
    if (index_.empty()) build_index();
    const auto it = index_.find(tok);
    return it == index_.end() ? unk_id : it->second;
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& w : split_tokens(text, kind)) ids.push_back(id_of(w));
    return ids;
}

std::string Vocab::decode(const std::vector<int>& ids, const std::string& sep) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += sep;
        out += token(ids[i]);
    }
    return out;
}

}  // namespace fplab
