#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lmsfd/rng.hpp"

namespace lmsfd {

// Fixed vocabulary layout: specials, then one tag and one marker token per
// language, then the surface tokens.
constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kNumSpecials = 4;

inline int lang_tag_id(int lang) { return kNumSpecials + lang; }
inline int marker_token_id(std::size_t n_languages, int lang) {
    return kNumSpecials + static_cast<int>(n_languages) + lang;
}
inline int surface_token_id(std::size_t n_languages, int token) {
    return kNumSpecials + 2 * static_cast<int>(n_languages) + token;
}

// One (source language, target language, source ids, target ids) example.
// Token ids live in the model vocabulary; src begins with the source-language
// marker token, tgt carries neither BOS nor EOS (batching adds them).
struct Example {
    int src_lang = 0;
    int tgt_lang = 0;
    std::vector<int> src;
    std::vector<int> tgt;
};

struct Corpus {
    std::size_t n_languages = 0;
    std::size_t vocab_size = 0;
    std::vector<Example> train;
    std::vector<Example> valid;
    // Per-language permutation over the latent vocabulary; present for cipher
    // corpora, empty for TSV corpora.
    std::vector<std::vector<int>> permutations;
};

// Synthetic translation task: every language renders a shared latent token
// sequence through its own permutation of the latent vocabulary, so
// translating (i -> j) means applying the pair-specific composition of j's
// permutation with the inverse of i's.
struct CipherTask {
    std::size_t n_languages = 4;
    std::size_t latent_vocab = 48;
    std::size_t min_len = 4;
    std::size_t max_len = 10;
    std::vector<std::pair<int, int>> pairs;         // translation directions
    std::vector<std::size_t> sentences_per_pair;    // train sizes, aligned with pairs
    std::size_t valid_per_pair = 32;
    // When non-empty, used instead of seed-generated permutations (tests).
    std::vector<std::vector<int>> permutations;
};

// English-centric default: pairs (0, j) and (j, 0) with deliberately
// asymmetric sizes to create high/low-resource directions.
CipherTask default_cipher_task();

Corpus gen_cipher_corpus(const CipherTask& task, std::uint64_t seed);

// Whitespace-tokenized TSV ingestion: four tab-separated columns
// src_lang, tgt_lang, src text, tgt text.
struct RawExample {
    std::string src_lang;
    std::string tgt_lang;
    std::vector<std::string> src_tokens;
    std::vector<std::string> tgt_tokens;
};

std::vector<RawExample> load_tsv(const std::string& path);

struct Vocab {
    std::map<std::string, int> lang_to_index;
    std::map<std::string, int> token_to_id;  // surface tokens only
    std::size_t n_languages = 0;
    std::size_t vocab_size = 0;

    int token_id(const std::string& token) const;  // kUnkId when absent
    int lang_index(const std::string& lang) const;  // throws LookupError
};

Vocab build_vocab(const std::vector<RawExample>& examples);
std::vector<Example> encode_examples(const std::vector<RawExample>& raw, const Vocab& vocab);

// Renders a cipher corpus split back to the TSV format ("m<k>" markers,
// "t<k>" surface tokens, "l<k>" languages).
void save_tsv(const std::vector<Example>& examples, std::size_t n_languages,
              const std::string& path);

// Homogeneous batch: every sentence shares one (src_lang, tgt_lang).
// src is [B x src_len], tgt is [B x tgt_len] (BOS ... EOS, right-padded),
// both row-major.
struct Batch {
    int src_lang = 0;
    int tgt_lang = 0;
    std::size_t batch_size = 0;
    std::size_t src_len = 0;
    std::size_t tgt_len = 0;
    std::vector<int> src;
    std::vector<int> tgt;
    int pad_id = kPadId;

    int src_at(std::size_t b, std::size_t t) const { return src[b * src_len + t]; }
    int tgt_at(std::size_t b, std::size_t t) const { return tgt[b * tgt_len + t]; }
};

// probability of pair k proportional to size_k^(1/T)
std::vector<double> temperature_sample(const std::vector<std::size_t>& sizes, double temperature);

// Streams homogeneous batches: picks a pair by temperature sampling, then
// cycles through that pair's examples in a per-epoch shuffled order.
class BatchSampler {
public:
    BatchSampler(const std::vector<Example>& examples, std::size_t batch_size,
                 double temperature, std::uint64_t seed);

    Batch next();

    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
    const std::vector<double>& pair_probabilities() const { return probs_; }

private:
    struct PairPool {
        std::vector<const Example*> examples;
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
    };

    std::size_t pick_pair();

    std::size_t batch_size_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<double> probs_;
    std::vector<PairPool> pools_;
    Rng rng_;
};

Batch make_batch(const std::vector<const Example*>& sentences);

// Deterministic per-pair evaluation batches covering every example once.
std::vector<Batch> make_eval_batches(const std::vector<Example>& examples,
                                     std::size_t batch_size);

}  // namespace lmsfd
