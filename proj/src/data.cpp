#include "lmsfd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lmsfd/errors.hpp"

namespace lmsfd {

CipherTask default_cipher_task() {
    CipherTask task;
    task.n_languages = 4;
    task.latent_vocab = 48;
    task.min_len = 4;
    task.max_len = 10;
    for (int j = 1; j < 4; ++j) {
        task.pairs.emplace_back(0, j);
        task.pairs.emplace_back(j, 0);
    }
    // High/low-resource asymmetry across the three non-English languages.
    task.sentences_per_pair = {1500, 1500, 500, 500, 150, 150};
    task.valid_per_pair = 32;
    return task;
}

namespace {

std::vector<std::vector<int>> generate_permutations(const CipherTask& task, Rng& rng) {
    std::vector<std::vector<int>> perms;
    std::vector<int> identity(task.latent_vocab);
    std::iota(identity.begin(), identity.end(), 0);
    for (std::size_t l = 0; l < task.n_languages; ++l) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            std::vector<int> p = identity;
            rng.shuffle(p);
            if (std::find(perms.begin(), perms.end(), p) == perms.end()) {
                perms.push_back(std::move(p));
                break;
            }
        }
        if (perms.size() != l + 1) {
            throw ConfigError("could not draw pairwise-distinct permutations; latent vocabulary too small");
        }
    }
    return perms;
}

void check_permutation(const std::vector<int>& p, std::size_t latent_vocab) {
    std::vector<bool> seen(latent_vocab, false);
    if (p.size() != latent_vocab) {
        throw ConfigError("permutation length does not match latent vocabulary");
    }
    for (int v : p) {
        if (v < 0 || static_cast<std::size_t>(v) >= latent_vocab || seen[static_cast<std::size_t>(v)]) {
            throw ConfigError("permutation is not a bijection on the latent vocabulary");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

}  // namespace

Corpus gen_cipher_corpus(const CipherTask& task, std::uint64_t seed) {
    if (task.latent_vocab < 2) {
        throw ConfigError("cipher task needs a latent vocabulary of at least 2");
    }
    if (task.n_languages < 1 || task.pairs.empty()) {
        throw ConfigError("cipher task needs at least one language and one pair");
    }
    if (task.sentences_per_pair.size() != task.pairs.size()) {
        throw ConfigError("sentences_per_pair must align with pairs");
    }
    if (task.min_len < 1 || task.max_len < task.min_len) {
        throw ConfigError("cipher sentence length range is empty");
    }
    for (const auto& [i, j] : task.pairs) {
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= task.n_languages ||
            static_cast<std::size_t>(j) >= task.n_languages) {
            throw ConfigError("cipher pair references an unknown language");
        }
    }

    Rng rng(seed);
    Corpus corpus;
    corpus.n_languages = task.n_languages;
    corpus.vocab_size = kNumSpecials + 2 * task.n_languages + task.latent_vocab;
    if (!task.permutations.empty()) {
        if (task.permutations.size() != task.n_languages) {
            throw ConfigError("explicit permutations must cover every language");
        }
        for (const auto& p : task.permutations) check_permutation(p, task.latent_vocab);
        corpus.permutations = task.permutations;
    } else {
        corpus.permutations = generate_permutations(task, rng);
    }

    auto gen_example = [&](int src_lang, int tgt_lang) {
        Example ex;
        ex.src_lang = src_lang;
        ex.tgt_lang = tgt_lang;
        const std::size_t len =
            task.min_len + rng.below(task.max_len - task.min_len + 1);
        ex.src.reserve(len + 1);
        ex.tgt.reserve(len);
        ex.src.push_back(marker_token_id(task.n_languages, src_lang));
        const auto& pi_src = corpus.permutations[static_cast<std::size_t>(src_lang)];
        const auto& pi_tgt = corpus.permutations[static_cast<std::size_t>(tgt_lang)];
        for (std::size_t k = 0; k < len; ++k) {
            const int z = static_cast<int>(rng.below(task.latent_vocab));
            ex.src.push_back(surface_token_id(task.n_languages, pi_src[static_cast<std::size_t>(z)]));
            ex.tgt.push_back(surface_token_id(task.n_languages, pi_tgt[static_cast<std::size_t>(z)]));
        }
        return ex;
    };

    for (std::size_t k = 0; k < task.pairs.size(); ++k) {
        const auto [i, j] = task.pairs[k];
        for (std::size_t s = 0; s < task.sentences_per_pair[k]; ++s) {
            corpus.train.push_back(gen_example(i, j));
        }
        for (std::size_t s = 0; s < task.valid_per_pair; ++s) {
            corpus.valid.push_back(gen_example(i, j));
        }
    }
    return corpus;
}

std::vector<RawExample> load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open tsv file '" + path + "'");
    }
    std::vector<RawExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 4) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected 4 tab-separated columns, got "
               << cols.size();
            throw ParseError(os.str());
        }
        RawExample ex;
        ex.src_lang = cols[0];
        ex.tgt_lang = cols[1];
        std::istringstream src(cols[2]);
        std::istringstream tgt(cols[3]);
        std::string tok;
        while (src >> tok) ex.src_tokens.push_back(tok);
        while (tgt >> tok) ex.tgt_tokens.push_back(tok);
        out.push_back(std::move(ex));
    }
    return out;
}

int Vocab::token_id(const std::string& token) const {
    const auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnkId : it->second;
}

int Vocab::lang_index(const std::string& lang) const {
    const auto it = lang_to_index.find(lang);
    if (it == lang_to_index.end()) {
        throw LookupError("unknown language '" + lang + "'");
    }
    return it->second;
}

Vocab build_vocab(const std::vector<RawExample>& examples) {
    Vocab vocab;
    for (const RawExample& ex : examples) {
        vocab.lang_to_index.emplace(ex.src_lang, 0);
        vocab.lang_to_index.emplace(ex.tgt_lang, 0);
    }
    int next_lang = 0;
    for (auto& [name, idx] : vocab.lang_to_index) idx = next_lang++;
    vocab.n_languages = static_cast<std::size_t>(next_lang);

    std::map<std::string, int> tokens;
    for (const RawExample& ex : examples) {
        for (const std::string& t : ex.src_tokens) tokens.emplace(t, 0);
        for (const std::string& t : ex.tgt_tokens) tokens.emplace(t, 0);
    }
    int next_id = kNumSpecials + 2 * next_lang;
    for (auto& [name, id] : tokens) id = next_id++;
    vocab.token_to_id = std::move(tokens);
    vocab.vocab_size = static_cast<std::size_t>(next_id);
    return vocab;
}

std::vector<Example> encode_examples(const std::vector<RawExample>& raw, const Vocab& vocab) {
    std::vector<Example> out;
    out.reserve(raw.size());
    for (const RawExample& r : raw) {
        Example ex;
        ex.src_lang = vocab.lang_index(r.src_lang);
        ex.tgt_lang = vocab.lang_index(r.tgt_lang);
        ex.src.reserve(r.src_tokens.size());
        for (const std::string& t : r.src_tokens) ex.src.push_back(vocab.token_id(t));
        ex.tgt.reserve(r.tgt_tokens.size());
        for (const std::string& t : r.tgt_tokens) ex.tgt.push_back(vocab.token_id(t));
        out.push_back(std::move(ex));
    }
    return out;
}

void save_tsv(const std::vector<Example>& examples, std::size_t n_languages,
              const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write tsv file '" + path + "'");
    }
    const int surface_base = surface_token_id(n_languages, 0);
    const int marker_base = marker_token_id(n_languages, 0);
    auto render = [&](int id) -> std::string {
        if (id >= surface_base) return "t" + std::to_string(id - surface_base);
        if (id >= marker_base) return "m" + std::to_string(id - marker_base);
        return "s" + std::to_string(id);
    };
    for (const Example& ex : examples) {
        out << "l" << ex.src_lang << '\t' << "l" << ex.tgt_lang << '\t';
        for (std::size_t i = 0; i < ex.src.size(); ++i) {
            if (i) out << ' ';
            out << render(ex.src[i]);
        }
        out << '\t';
        for (std::size_t i = 0; i < ex.tgt.size(); ++i) {
            if (i) out << ' ';
            out << render(ex.tgt[i]);
        }
        out << '\n';
    }
}

std::vector<double> temperature_sample(const std::vector<std::size_t>& sizes,
                                       double temperature) {
    if (temperature < 1.0) {
        throw ConfigError("sampling temperature must be at least 1");
    }
    std::vector<double> probs(sizes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) {
            throw ConfigError("temperature sampling requires positive pair sizes");
        }
        probs[i] = std::pow(static_cast<double>(sizes[i]), 1.0 / temperature);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

BatchSampler::BatchSampler(const std::vector<Example>& examples, std::size_t batch_size,
                           double temperature, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
    if (batch_size < 1) {
        throw ConfigError("batch size must be at least 1");
    }
    if (examples.empty()) {
        throw DataError("cannot sample batches from an empty corpus");
    }
    std::map<std::pair<int, int>, std::size_t> index;
    for (const Example& ex : examples) {
        const std::pair<int, int> key{ex.src_lang, ex.tgt_lang};
        auto [it, inserted] = index.emplace(key, pools_.size());
        if (inserted) {
            pairs_.push_back(key);
            pools_.emplace_back();
        }
        pools_[it->second].examples.push_back(&ex);
    }
    std::vector<std::size_t> sizes;
    sizes.reserve(pools_.size());
    for (const PairPool& pool : pools_) sizes.push_back(pool.examples.size());
    probs_ = temperature_sample(sizes, temperature);
    for (PairPool& pool : pools_) {
        pool.order.resize(pool.examples.size());
        std::iota(pool.order.begin(), pool.order.end(), 0);
        rng_.shuffle(pool.order);
    }
}

std::size_t BatchSampler::pick_pair() {
    const double u = rng_.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        acc += probs_[i];
        if (u < acc) return i;
    }
    return probs_.size() - 1;
}

Batch BatchSampler::next() {
    PairPool& pool = pools_[pick_pair()];
    std::vector<const Example*> sentences;
    sentences.reserve(batch_size_);
    for (std::size_t i = 0; i < batch_size_; ++i) {
        if (pool.cursor == pool.order.size()) {
            rng_.shuffle(pool.order);
            pool.cursor = 0;
        }
        sentences.push_back(pool.examples[pool.order[pool.cursor++]]);
    }
    return make_batch(sentences);
}

Batch make_batch(const std::vector<const Example*>& sentences) {
    if (sentences.empty()) {
        throw DataError("cannot build an empty batch");
    }
    Batch batch;
    batch.src_lang = sentences[0]->src_lang;
    batch.tgt_lang = sentences[0]->tgt_lang;
    batch.batch_size = sentences.size();
    for (const Example* ex : sentences) {
        if (ex->src_lang != batch.src_lang || ex->tgt_lang != batch.tgt_lang) {
            throw DataError("batch is not homogeneous in (src_lang, tgt_lang)");
        }
        batch.src_len = std::max(batch.src_len, ex->src.size());
        batch.tgt_len = std::max(batch.tgt_len, ex->tgt.size() + 2);  // BOS ... EOS
    }
    batch.src.assign(batch.batch_size * batch.src_len, kPadId);
    batch.tgt.assign(batch.batch_size * batch.tgt_len, kPadId);
    for (std::size_t b = 0; b < sentences.size(); ++b) {
        const Example& ex = *sentences[b];
        for (std::size_t t = 0; t < ex.src.size(); ++t) {
            batch.src[b * batch.src_len + t] = ex.src[t];
        }
        batch.tgt[b * batch.tgt_len] = kBosId;
        for (std::size_t t = 0; t < ex.tgt.size(); ++t) {
            batch.tgt[b * batch.tgt_len + t + 1] = ex.tgt[t];
        }
        batch.tgt[b * batch.tgt_len + ex.tgt.size() + 1] = kEosId;
    }
    return batch;
}

std::vector<Batch> make_eval_batches(const std::vector<Example>& examples,
                                     std::size_t batch_size) {
    std::map<std::pair<int, int>, std::vector<const Example*>> by_pair;
    for (const Example& ex : examples) {
        by_pair[{ex.src_lang, ex.tgt_lang}].push_back(&ex);
    }
    std::vector<Batch> out;
    for (const auto& [pair, group] : by_pair) {
        for (std::size_t start = 0; start < group.size(); start += batch_size) {
            const std::size_t end = std::min(start + batch_size, group.size());
            out.push_back(make_batch({group.begin() + static_cast<std::ptrdiff_t>(start),
                                      group.begin() + static_cast<std::ptrdiff_t>(end)}));
        }
    }
    return out;
}

}  // namespace lmsfd
