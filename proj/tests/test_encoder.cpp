#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "inflacast/common.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/random.hpp"
#include "inflacast/text.hpp"

using namespace inflacast;
using namespace inflacast::encoder;

namespace {

EncoderConfig micro_config() {
    EncoderConfig c;
    c.vocab_size = 50;
    c.max_len = 8;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.d_ff = 16;
    c.dropout = 0.0;
    c.any_max_len = true;
    return c;
}

EncoderModel random_model(const EncoderConfig& cfg, std::uint64_t seed, double scale) {
    EncoderModel m(cfg);
    Rng rng(seed);
    for (auto& p : m.params()) {
        p = scale * rng.normal();
    }
    return m;
}

Encoding random_sequence(Rng& rng, std::size_t max_len, std::size_t vocab, std::size_t active) {
    Encoding e;
    e.ids.assign(max_len, SubwordTokenizer::kPad);
    e.mask.assign(max_len, 0);
    e.word_of.assign(max_len, -1);
    e.ids[0] = SubwordTokenizer::kCls;
    e.mask[0] = 1;
    for (std::size_t i = 1; i + 1 < active; ++i) {
        e.ids[i] = static_cast<int>(SubwordTokenizer::kSpecials + rng.below(vocab - SubwordTokenizer::kSpecials));
        e.mask[i] = 1;
    }
    e.ids[active - 1] = SubwordTokenizer::kSep;
    e.mask[active - 1] = 1;
    return e;
}

// Straightforward full-length forward pass: every position computed, padded keys get -inf.
Logits oracle_forward(const EncoderModel& m, const Encoding& e) {
    const auto& c = m.config();
    const std::size_t L = c.max_len, d = c.d_model, H = c.n_heads, dh = d / H, F = c.d_ff;
    auto T = [&](const std::string& n) { return m.tensor(n); };
    using Mat = std::vector<std::vector<double>>;
    auto zeros = [](std::size_t r, std::size_t k) { return Mat(r, std::vector<double>(k, 0.0)); };
    auto linear = [&](const Mat& x, std::span<const double> W, std::span<const double> b, std::size_t in,
                      std::size_t out) {
        Mat y = zeros(x.size(), out);
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t o = 0; o < out; ++o) {
                double s = b[o];
                for (std::size_t k = 0; k < in; ++k) s += x[i][k] * W[k * out + o];
                y[i][o] = s;
            }
        return y;
    };
    auto norm = [&](const Mat& x, std::span<const double> g, std::span<const double> b) {
        Mat y = x;
        for (auto& row : y) {
            double mu = 0, var = 0;
            for (double v : row) mu += v;
            mu /= static_cast<double>(d);
            for (double v : row) var += (v - mu) * (v - mu);
            var /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) row[j] = g[j] * (row[j] - mu) / std::sqrt(var + 1e-5) + b[j];
        }
        return y;
    };
    Mat x = zeros(L, d);
    for (std::size_t p = 0; p < L; ++p)
        for (std::size_t j = 0; j < d; ++j)
            x[p][j] = T("tok_emb")[static_cast<std::size_t>(e.ids[p]) * d + j] + T("pos_emb")[p * d + j];
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        Mat h = norm(x, T(p + "ln1.gamma"), T(p + "ln1.beta"));
        Mat q = linear(h, T(p + "attn.wq"), T(p + "attn.bq"), d, d);
        Mat k = linear(h, T(p + "attn.wk"), T(p + "attn.bk"), d, d);
        Mat v = linear(h, T(p + "attn.wv"), T(p + "attn.bv"), d, d);
        Mat o = zeros(L, d);
        for (std::size_t hd = 0; hd < H; ++hd)
            for (std::size_t i = 0; i < L; ++i) {
                std::vector<double> s(L);
                for (std::size_t j = 0; j < L; ++j) {
                    double dot = 0;
                    for (std::size_t t = 0; t < dh; ++t) dot += q[i][hd * dh + t] * k[j][hd * dh + t];
                    s[j] = e.mask[j] ? dot / std::sqrt(static_cast<double>(dh))
                                     : -std::numeric_limits<double>::infinity();
                }
                const double mx = *std::max_element(s.begin(), s.end());
                double z = 0;
                for (auto& v2 : s) z += (v2 = std::exp(v2 - mx));
                for (std::size_t j = 0; j < L; ++j)
                    for (std::size_t t = 0; t < dh; ++t) o[i][hd * dh + t] += s[j] / z * v[j][hd * dh + t];
            }
        Mat a = linear(o, T(p + "attn.wo"), T(p + "attn.bo"), d, d);
        for (std::size_t i = 0; i < L; ++i)
            for (std::size_t j = 0; j < d; ++j) x[i][j] += a[i][j];
        Mat h2 = norm(x, T(p + "ln2.gamma"), T(p + "ln2.beta"));
        Mat u = linear(h2, T(p + "ffn.w1"), T(p + "ffn.b1"), d, F);
        for (auto& row : u)
            for (auto& val : row) val = 0.5 * val * (1 + std::erf(val / std::sqrt(2.0)));
        Mat f = linear(u, T(p + "ffn.w2"), T(p + "ffn.b2"), F, d);
        for (std::size_t i = 0; i < L; ++i)
            for (std::size_t j = 0; j < d; ++j) x[i][j] += f[i][j];
    }
    Mat cls = norm(Mat{x[0]}, T("final_ln.gamma"), T("final_ln.beta"));
    Mat out = linear(cls, T("head.w"), T("head.b"), d, 2);
    return {out[0][0], out[0][1]};
}

std::vector<std::string> synthetic_sentences(std::uint64_t seed, std::size_t n) {
    const std::vector<std::string> words = {"цены", "выросли", "снизились", "на", "бензин", "хлеб", "молоко",
                                            "рубль", "курс", "доллара", "инфляция", "тарифы", "аренда", "ставка"};
    Rng rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        const auto len = 3 + rng.below(6);
        for (std::size_t w = 0; w < len; ++w) {
            if (w) s += ' ';
            s += words[rng.below(words.size())];
        }
        out.push_back(s);
    }
    return out;
}

// Reference BPE: every word occurrence is kept separately and symbols stay strings.
std::vector<std::pair<std::string, std::string>> reference_merges(const std::vector<std::string>& corpus,
                                                                  std::size_t n_merges) {
    std::vector<std::vector<std::string>> seqs;
    for (const auto& doc : corpus) {
        for (const auto& w : text::split_words(text::normalize(doc))) {
            std::vector<std::string> s{"\xE2\x96\x81"};
            for (char32_t cp : text::decode_utf8(w)) s.push_back(text::encode_utf8(std::u32string(1, cp)));
            seqs.push_back(s);
        }
    }
    std::vector<std::pair<std::string, std::string>> merges;
    while (merges.size() < n_merges) {
        std::map<std::pair<std::string, std::string>, long> counts;
        for (const auto& s : seqs)
            for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[{s[i], s[i + 1]}];
        if (counts.empty()) break;
        auto best = counts.begin();
        for (auto it = counts.begin(); it != counts.end(); ++it)
            if (it->second > best->second) best = it;
        const auto pair = best->first;
        merges.push_back(pair);
        for (auto& s : seqs) {
            std::vector<std::string> out;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (i + 1 < s.size() && s[i] == pair.first && s[i + 1] == pair.second) {
                    out.push_back(pair.first + pair.second);
                    ++i;
                } else {
                    out.push_back(s[i]);
                }
            }
            s = out;
        }
    }
    return merges;
}

double max_relative_gradient_error(const EncoderModel& model, const std::vector<Encoding>& batch,
                                   const std::vector<int>& labels, const ForwardOptions& opt) {
    std::vector<double> grad;
    loss_and_gradient(model, batch, labels, grad, opt);
    EncoderModel probe = model;
    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.params().size(); ++i) {
        const double orig = probe.params()[i];
        probe.params()[i] = orig + h;
        const double up = mean_loss(probe, batch, labels, opt);
        probe.params()[i] = orig - h;
        const double down = mean_loss(probe, batch, labels, opt);
        probe.params()[i] = orig;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
        const double err = scale < 1e-7 ? std::abs(numeric - grad[i]) / 1e-7 * 1e-3 : std::abs(numeric - grad[i]) / scale;
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace

TEST_CASE("tokenizer learns the only available merge") {
    auto tok = SubwordTokenizer::train({"aaaa"}, SubwordTokenizer::kSpecials + 2 + 1);
    REQUIRE(tok.merges().size() == 1);
    CHECK(tok.merges()[0] == std::pair<std::string, std::string>{"a", "a"});
}

TEST_CASE("tokenizer with room only for the alphabet learns nothing") {
    auto base = SubwordTokenizer::train({"abc cab"}, 100);
    const std::size_t minimum = SubwordTokenizer::kSpecials + base.base_size();
    auto tok = SubwordTokenizer::train({"abc cab"}, minimum);
    CHECK(tok.merges().empty());
    CHECK(tok.vocab_size() == minimum);
    CHECK_THROWS_AS(SubwordTokenizer::train({"abc cab"}, minimum - 1), UsageError);
}

TEST_CASE("tokenizer merges match a reference greedy implementation") {
    const auto corpus = synthetic_sentences(11, 200);
    auto tok = SubwordTokenizer::train(corpus, 120);
    const auto expected = reference_merges(corpus, tok.merges().size());
    CHECK(tok.merges() == expected);
    // 14 distinct words run out of pairs before the budget: each ends up as one symbol
    CHECK(tok.vocab_size() <= 120);
    for (const auto& w : text::split_words(corpus[0])) {
        CHECK(tok.encode_word(w).size() == 1);
    }
    auto tight = SubwordTokenizer::train(corpus, 40);
    CHECK(tight.vocab_size() == 40);
    CHECK(tight.merges() == reference_merges(corpus, tight.merges().size()));
}

TEST_CASE("encode pads, truncates and round-trips") {
    const auto corpus = synthetic_sentences(3, 50);
    auto tok = SubwordTokenizer::train(corpus, 80);

    auto empty = tok.encode("", 8);
    CHECK(empty.ids == std::vector<int>{2, 3, 0, 0, 0, 0, 0, 0});
    CHECK(empty.mask == std::vector<int>{1, 1, 0, 0, 0, 0, 0, 0});

    const std::string long_text = corpus[0] + " " + corpus[1] + " " + corpus[2] + " " + corpus[3];
    auto cut = tok.encode(long_text, 8);
    CHECK(cut.ids.size() == 8);
    CHECK(cut.ids[7] == SubwordTokenizer::kSep);
    CHECK(cut.active() == 8);
    const auto full = tok.tokenize(long_text);
    REQUIRE(full.size() > 6);
    CHECK(std::equal(full.begin(), full.begin() + 6, cut.ids.begin() + 1));

    for (const auto& s : corpus) {
        const std::string messy = "  " + s + "\t ";
        CHECK(tok.decode(tok.tokenize(messy)) == text::normalize(messy));
        for (int id : tok.encode(s, 64).ids) {
            CHECK(static_cast<std::size_t>(id) < tok.vocab_size());
        }
    }
    CHECK(tok.encode("Цены  ВЫРОСЛИ", 16).ids == tok.encode("цены выросли", 16).ids);
    // characters never seen in training map to [UNK]
    const auto unk = tok.tokenize("ж");
    CHECK(std::count(unk.begin(), unk.end(), SubwordTokenizer::kUnk) == 1);
}

TEST_CASE("tokenizer description round-trips") {
    auto tok = SubwordTokenizer::train(synthetic_sentences(5, 40), 70);
    auto back = SubwordTokenizer::from_json(tok.to_json());
    CHECK(back.symbols() == tok.symbols());
    CHECK(back.merges() == tok.merges());
    CHECK(back.tokenize("цены выросли на хлеб") == tok.tokenize("цены выросли на хлеб"));
}

TEST_CASE("forward produces one logit pair per sequence") {
    auto cfg = micro_config();
    cfg.d_model = 16;
    auto m = EncoderModel::initialized(cfg, 1);
    Rng rng(2);
    std::vector<Encoding> batch{random_sequence(rng, 8, 50, 5), random_sequence(rng, 8, 50, 8)};
    const auto out = forward(m, batch);
    REQUIRE(out.size() == 2);
    for (const auto& z : out) {
        CHECK(std::isfinite(z[0]));
        CHECK(std::isfinite(z[1]));
    }
}

TEST_CASE("forward matches a full-length matrix oracle") {
    auto cfg = micro_config();
    cfg.n_layers = 2;
    auto m = random_model(cfg, 17, 0.3);
    Rng rng(4);
    for (std::size_t active : {2u, 5u, 8u}) {
        const auto seq = random_sequence(rng, 8, 50, active);
        const auto got = forward_one(m, seq);
        const auto want = oracle_forward(m, seq);
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-9));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-9));
        CHECK(std::abs(got[0] - want[0]) < 1e-6);
        CHECK(std::abs(got[1] - want[1]) < 1e-6);
    }
}

TEST_CASE("padding content never reaches the logits") {
    auto m = random_model(micro_config(), 5, 0.3);
    Rng rng(6);
    auto seq = random_sequence(rng, 8, 50, 4);
    const auto base = forward_one(m, seq);
    for (std::size_t p = 4; p < 8; ++p) {
        seq.ids[p] = static_cast<int>(10 + p);
    }
    const auto other = forward_one(m, seq);
    CHECK(base == other);
}

TEST_CASE("out-of-range ids are rejected") {
    auto m = random_model(micro_config(), 5, 0.3);
    Rng rng(6);
    auto seq = random_sequence(rng, 8, 50, 4);
    seq.ids[2] = 50;
    CHECK_THROWS_AS(forward_one(m, seq), Error);
}

TEST_CASE("attention rows are distributions that ignore padding") {
    auto cfg = micro_config();
    cfg.n_layers = 2;
    auto m = random_model(cfg, 8, 0.5);
    Rng rng(9);
    const auto seq = random_sequence(rng, 8, 50, 5);
    const auto maps = attention_maps(m, seq);
    REQUIRE(maps.size() == cfg.n_layers * cfg.n_heads);
    for (const auto& a : maps) {
        for (std::size_t i = 0; i < 8; ++i) {
            if (!seq.mask[i]) {
                continue;
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                sum += a[i * 8 + j];
                if (!seq.mask[j]) {
                    CHECK(a[i * 8 + j] == 0.0);
                }
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("permuting a batch permutes its logits") {
    auto m = random_model(micro_config(), 12, 0.3);
    Rng rng(13);
    std::vector<Encoding> batch;
    for (int i = 0; i < 5; ++i) {
        batch.push_back(random_sequence(rng, 8, 50, 3 + rng.below(6)));
    }
    const auto a = forward(m, batch);
    std::vector<Encoding> reversed(batch.rbegin(), batch.rend());
    const auto b = forward(m, reversed);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(a[i] == b[batch.size() - 1 - i]);
    }
}

TEST_CASE("gradients match central finite differences") {
    auto cfg = micro_config();
    auto m = random_model(cfg, 21, 0.4);
    Rng rng(22);
    std::vector<Encoding> batch;
    std::vector<int> labels;
    for (int i = 0; i < 3; ++i) {
        batch.push_back(random_sequence(rng, 8, 50, 4 + static_cast<std::size_t>(i) * 2));
        labels.push_back(i % 2);
    }
    SUBCASE("inference mode") { CHECK(max_relative_gradient_error(m, batch, labels, {}) < 1e-3); }
    SUBCASE("with a fixed dropout draw") {
        cfg.dropout = 0.2;
        EncoderModel dm(cfg);
        dm.params() = m.params();
        ForwardOptions opt;
        opt.training = true;
        opt.dropout_seed = 99;
        CHECK(max_relative_gradient_error(dm, batch, labels, opt) < 1e-3);
    }
}

TEST_CASE("confident correct predictions carry almost no gradient") {
    auto m = random_model(micro_config(), 31, 0.1);
    m.tensor("head.b")[1] = 40.0;
    Rng rng(32);
    std::vector<Encoding> batch{random_sequence(rng, 8, 50, 6)};
    std::vector<int> labels{1};
    std::vector<double> grad;
    loss_and_gradient(m, batch, labels, grad);
    double norm = 0.0;
    for (double g : grad) {
        norm += g * g;
    }
    CHECK(std::sqrt(norm) < 1e-12);
}

TEST_CASE("a small gradient step lowers the loss") {
    auto m = random_model(micro_config(), 41, 0.3);
    Rng rng(42);
    std::vector<Encoding> batch;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        batch.push_back(random_sequence(rng, 8, 50, 3 + rng.below(6)));
        labels.push_back(i % 2);
    }
    std::vector<double> grad;
    const double before = loss_and_gradient(m, batch, labels, grad);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        m.params()[i] -= 1e-3 * grad[i];
    }
    CHECK(mean_loss(m, batch, labels) < before);
}

TEST_CASE("zeroed head predicts one half") {
    auto m = EncoderModel::initialized(micro_config(), 3);
    std::fill(m.tensor("head.w").begin(), m.tensor("head.w").end(), 0.0);
    Rng rng(1);
    CHECK(predict_proba(m, random_sequence(rng, 8, 50, 5)) == 0.5);
}

TEST_CASE("initialization follows the declared scheme") {
    auto cfg = micro_config();
    cfg.vocab_size = 400;
    auto m = EncoderModel::initialized(cfg, 77);
    for (double g : m.tensor("layer0.ln1.gamma")) CHECK(g == 1.0);
    for (double b : m.tensor("layer0.attn.bq")) CHECK(b == 0.0);
    const auto emb = m.tensor("tok_emb");
    double sum = 0.0, sq = 0.0;
    for (double v : emb) {
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(emb.size());
    CHECK(std::abs(sum / n) < 0.002);
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.02).epsilon(0.05));
    CHECK(EncoderModel::initialized(cfg, 77).params() == m.params());
}

TEST_CASE("AdamW decays weights but not norms or biases") {
    auto m = random_model(micro_config(), 51, 0.5);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.weight_decay = 0.5;
    AdamW opt(m, tc);
    const auto before = m.params();
    std::vector<double> grad(before.size(), 0.0);
    opt.step(m, grad);
    for (const auto& b : m.layout()) {
        for (std::size_t i = b.offset; i < b.offset + b.size(); ++i) {
            const double want = b.decay ? before[i] * (1.0 - 0.1 * 0.5) : before[i];
            CHECK(m.params()[i] == doctest::Approx(want).epsilon(1e-14));
        }
    }

    // first step with gradient g moves each parameter by lr * g / (|g| + eps)
    auto m2 = random_model(micro_config(), 52, 0.5);
    tc.weight_decay = 0.0;
    AdamW opt2(m2, tc);
    const auto p0 = m2.params();
    std::vector<double> g2(p0.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = (i % 3 == 0 ? -1.0 : 1.0) * (0.01 + static_cast<double>(i % 7));
    opt2.step(m2, g2);
    for (std::size_t i = 0; i < g2.size(); ++i) {
        CHECK(m2.params()[i] == doctest::Approx(p0[i] - 0.1 * g2[i] / (std::abs(g2[i]) + 1e-8)).epsilon(1e-12));
    }
}

TEST_CASE("zero learning rate leaves the model untouched") {
    const auto corpus = synthetic_sentences(61, 40);
    auto tok = SubwordTokenizer::train(corpus, 60);
    auto cfg = micro_config();
    cfg.max_len = 16;
    cfg.vocab_size = tok.vocab_size();
    auto m = EncoderModel::initialized(cfg, 5);
    LabeledSequences tr, va;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto& dst = i < 30 ? tr : va;
        dst.inputs.push_back(tok.encode(corpus[i], 16));
        dst.labels.push_back(static_cast<int>(i % 2));
    }
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.batch_size = 8;
    tc.epochs = 3;
    const auto before = m.params();
    const auto curve = train(m, tr, va, tc);
    CHECK(m.params() == before);
    REQUIRE(curve.epochs.size() == 3);
    CHECK(curve.epochs[0].val_loss == curve.epochs[2].val_loss);
}

TEST_CASE("training on separable sentences lowers both losses") {
    // label 1 sentences mention rising prices, label 0 sentences falling ones
    const std::vector<std::string> up = {"цены выросли", "бензин подорожал", "тарифы повысили", "аренда растет"};
    const std::vector<std::string> down = {"цены снизились", "бензин подешевел", "тарифы понизили", "аренда падает"};
    const std::vector<std::string> filler = {"в омске", "на этой неделе", "по данным магазинов", "как сообщают"};
    Rng rng(7);
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        const int y = i % 2;
        const auto& pool = y ? up : down;
        texts.push_back(filler[rng.below(4)] + " " + pool[rng.below(4)] + " " + filler[rng.below(4)]);
        labels.push_back(y);
    }
    auto tok = SubwordTokenizer::train(texts, 200);
    EncoderConfig cfg;
    cfg.vocab_size = tok.vocab_size();
    cfg.max_len = 64;
    cfg.d_model = 32;
    cfg.n_heads = 4;
    cfg.n_layers = 1;
    cfg.d_ff = 64;
    auto m = EncoderModel::initialized(cfg, 7);
    LabeledSequences tr, va;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto& dst = i < 160 ? tr : va;
        dst.inputs.push_back(tok.encode(texts[i], cfg.max_len));
        dst.labels.push_back(labels[i]);
    }
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.seed = 7;
    const auto curve = train(m, tr, va, tc);
    REQUIRE(curve.epochs.size() == 5);
    for (std::size_t e = 1; e < 5; ++e) {
        CHECK(curve.epochs[e].val_loss <= curve.epochs[e - 1].val_loss);
    }
    CHECK(curve.epochs.back().train_loss < curve.epochs.front().train_loss);

    // identical seed, identical curve
    auto m2 = EncoderModel::initialized(cfg, 7);
    const auto again = train(m2, tr, va, tc);
    for (std::size_t e = 0; e < 5; ++e) {
        CHECK(again.epochs[e].train_loss == curve.epochs[e].train_loss);
        CHECK(again.epochs[e].val_loss == curve.epochs[e].val_loss);
    }
    CHECK(m2.params() == m.params());
}

TEST_CASE("checkpoints round-trip exactly") {
    const auto corpus = synthetic_sentences(71, 30);
    EncoderClassifier clf{SubwordTokenizer::train(corpus, 64), EncoderModel::initialized(micro_config(), 71)};
    auto cfg = micro_config();
    cfg.vocab_size = 64;
    cfg.max_len = 16;
    clf.model = EncoderModel::initialized(cfg, 71);
    const auto bytes = clf.serialize();
    const auto back = EncoderClassifier::deserialize(bytes);
    CHECK(back.model.params() == clf.model.params());
    CHECK(back.tokenizer.symbols() == clf.tokenizer.symbols());
    for (const auto& s : corpus) {
        CHECK(back.predict(s) == clf.predict(s));
    }
    CHECK(back.serialize() == bytes);
    CHECK_THROWS_AS(EncoderClassifier::deserialize(bytes.substr(0, bytes.size() - 3)), ParseError);
    CHECK_THROWS_AS(EncoderClassifier::deserialize("garbage\n{}\n"), ParseError);
}

TEST_CASE("longer max_len variants take longer to train on long posts") {
    std::vector<std::string> docs;
    Rng rng(81);
    const std::vector<std::string> words = {"цены", "рост", "хлеб", "курс", "рубль", "ставка", "тариф", "налог"};
    for (int i = 0; i < 12; ++i) {
        std::string s;
        for (int w = 0; w < 400; ++w) s += words[rng.below(words.size())] + " ";
        docs.push_back(s);
    }
    auto tok = SubwordTokenizer::train(docs, 40);
    std::vector<double> seconds;
    for (std::size_t L : {64u, 128u, 256u, 512u}) {
        EncoderConfig cfg;
        cfg.vocab_size = tok.vocab_size();
        cfg.max_len = L;
        cfg.d_model = 16;
        cfg.n_heads = 2;
        cfg.n_layers = 1;
        cfg.d_ff = 32;
        auto m = EncoderModel::initialized(cfg, 1);
        LabeledSequences tr;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            tr.inputs.push_back(tok.encode(docs[i], L));
            tr.labels.push_back(static_cast<int>(i % 2));
        }
        REQUIRE(tr.inputs[0].active() == L);
        TrainConfig tc;
        tc.epochs = 1;
        tc.batch_size = 4;
        const auto t0 = std::chrono::steady_clock::now();
        train(m, tr, {}, tc);
        seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    for (std::size_t i = 1; i < seconds.size(); ++i) {
        CHECK(seconds[i] > seconds[i - 1]);
    }
}
