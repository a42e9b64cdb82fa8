#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace inflacast::encoder {

// ---------------------------------------------------------------------------
// Subword tokenizer
// ---------------------------------------------------------------------------

/// ids plus attention mask, both max_len long. word_of maps each position to the index of
/// the normalized word it came from (-1 for [CLS], [SEP] and padding).
struct Encoding {
    std::vector<int> ids;
    std::vector<int> mask;
    std::vector<int> word_of;

    std::size_t length() const noexcept { return ids.size(); }
    std::size_t active() const;
};

/// Byte-pair style merges over characters. Every word of the normalized text starts with
/// the marker symbol U+2581, so decoding can restore the spaces.
class SubwordTokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr int kSpecials = 4;
    static constexpr std::string_view kWordStart = "\xE2\x96\x81";

    SubwordTokenizer() = default;

    /// Learns merges greedily by highest pair frequency (ties: lexicographically smallest
    /// pair) until vocab_size ids exist or no pair is left. Throws if vocab_size cannot hold
    /// the specials and the base alphabet.
    static SubwordTokenizer train(const std::vector<std::string>& corpus, std::size_t vocab_size);

    /// Subword ids of one normalized word (without the marker; it is added here).
    std::vector<int> encode_word(std::string_view word) const;
    /// Subword ids of a text, no specials.
    std::vector<int> tokenize(std::string_view text) const;
    std::vector<std::string> pieces(std::string_view text) const;

    /// [CLS] subwords [SEP], head-truncated so [SEP] sits at max_len - 1 at the latest, then padded.
    Encoding encode(std::string_view text, std::size_t max_len) const;
    /// Same, from an explicit word list (each word encoded as by encode_word).
    Encoding encode_words(const std::vector<std::string>& words, std::size_t max_len) const;

    /// Concatenates non-special pieces and turns markers back into spaces.
    std::string decode(const std::vector<int>& ids) const;

    std::size_t vocab_size() const noexcept { return symbols_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const std::vector<std::string>& symbols() const noexcept { return symbols_; }
    const std::vector<std::pair<std::string, std::string>>& merges() const noexcept { return merges_; }
    std::size_t base_size() const noexcept { return base_size_; }
    /// -1 when the symbol is unknown.
    int id_of(const std::string& symbol) const;

    std::string to_json() const;
    static SubwordTokenizer from_json(std::string_view json);

private:
    void rebuild_index();

    std::vector<std::string> symbols_;  // id -> symbol, specials first
    std::vector<std::pair<std::string, std::string>> merges_;
    std::size_t base_size_ = 0;
    std::size_t capacity_ = 0;  // requested vocab_size
    std::map<std::string, int> index_;
    std::map<std::pair<std::string, std::string>, int> rank_;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct EncoderConfig {
    std::size_t vocab_size = 8000;
    std::size_t max_len = 128;
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t n_layers = 2;
    std::size_t d_ff = 256;
    double dropout = 0.1;
    bool any_max_len = false;  // allow max_len outside {64, 128, 256, 512}

    void validate() const;
    std::size_t head_dim() const noexcept { return d_model / n_heads; }
};

/// One named tensor inside the flat parameter buffer, row-major rows x cols.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool decay = true;  // false for layer-norm and bias tensors

    std::size_t size() const noexcept { return rows * cols; }
};

class EncoderModel {
public:
    /// Zero parameters except layer-norm scales, which are 1.
    explicit EncoderModel(const EncoderConfig& cfg);

    /// Weights ~ N(0, 0.02), biases 0, layer-norm scale 1 and shift 0.
    static EncoderModel initialized(const EncoderConfig& cfg, std::uint64_t seed);

    const EncoderConfig& config() const noexcept { return cfg_; }
    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }
    const std::vector<ParamBlock>& layout() const noexcept { return layout_; }
    const ParamBlock& block(const std::string& name) const;
    std::span<double> tensor(const std::string& name);
    std::span<const double> tensor(const std::string& name) const;

    std::string checkpoint_header_json() const;

private:
    EncoderConfig cfg_;
    std::vector<ParamBlock> layout_;
    std::vector<double> params_;
};

struct ForwardOptions {
    bool training = false;          // enables dropout
    std::uint64_t dropout_seed = 0;  // per-example streams derive from this and the batch index
};

using Logits = std::array<double, 2>;

/// Logits for each sequence. Pad positions never influence the result: they are removed
/// from attention as keys, and only the [CLS] row feeds the head.
std::vector<Logits> forward(const EncoderModel& model, std::span<const Encoding> batch, const ForwardOptions& opt = {});
Logits forward_one(const EncoderModel& model, const Encoding& seq, const ForwardOptions& opt = {},
                   std::size_t batch_index = 0);

/// Softmax attention weights per layer and head: max_len x max_len row-major, query rows
/// for padding left at zero.
std::vector<std::vector<double>> attention_maps(const EncoderModel& model, const Encoding& seq);

/// Mean cross-entropy over the batch; `grad` is resized to the parameter count and filled with
/// the exact gradient.
double loss_and_gradient(const EncoderModel& model, std::span<const Encoding> batch, std::span<const int> labels,
                         std::vector<double>& grad, const ForwardOptions& opt = {});

/// Mean cross-entropy without gradients.
double mean_loss(const EncoderModel& model, std::span<const Encoding> batch, std::span<const int> labels,
                 const ForwardOptions& opt = {});

/// P(class 1) from the softmax of the logits.
double predict_proba(const EncoderModel& model, const Encoding& seq);
double class1_logit(const EncoderModel& model, const Encoding& seq);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t batch_size = 32;
    int epochs = 5;
    double learning_rate = 2e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// AdamW state with decoupled weight decay; tensors flagged decay=false are never decayed.
class AdamW {
public:
    AdamW(const EncoderModel& model, const TrainConfig& tc);
    void step(EncoderModel& model, const std::vector<double>& grad);
    std::uint64_t steps() const noexcept { return t_; }

private:
    TrainConfig tc_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::vector<char> decay_;
    std::uint64_t t_ = 0;
};

struct EpochLoss {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct LossCurve {
    std::vector<EpochLoss> epochs;

    std::string to_csv() const;
};

struct LabeledSequences {
    std::vector<Encoding> inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return inputs.size(); }
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Trains exactly tc.epochs epochs with a constant learning rate. Train loss is the
/// example-weighted mean over the epoch's batches (dropout active); validation loss is
/// measured after each epoch in inference mode (NaN when the split is empty).
LossCurve train(EncoderModel& model, const LabeledSequences& train_set, const LabeledSequences& val_set,
                const TrainConfig& tc, const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Classifier bundle and checkpoints
// ---------------------------------------------------------------------------

struct EncoderClassifier {
    SubwordTokenizer tokenizer;
    EncoderModel model;

    Encoding encode(std::string_view text) const { return tokenizer.encode(text, model.config().max_len); }
    double predict(std::string_view text) const { return predict_proba(model, encode(text)); }

    std::string serialize() const;
    static EncoderClassifier deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static EncoderClassifier load(const std::filesystem::path& path);
};

}  // namespace inflacast::encoder
