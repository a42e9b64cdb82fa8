#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "inflacast/common.hpp"
#include "inflacast/encoder.hpp"
#include "inflacast/random.hpp"

namespace inflacast::encoder {

namespace {

constexpr std::string_view kCheckpointMagic = "inflacast-encoder v1";

nlohmann::ordered_json config_json(const EncoderConfig& c) {
    nlohmann::ordered_json j;
    j["vocab_size"] = c.vocab_size;
    j["max_len"] = c.max_len;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["n_layers"] = c.n_layers;
    j["d_ff"] = c.d_ff;
    j["dropout"] = c.dropout;
    j["any_max_len"] = c.any_max_len;
    return j;
}

EncoderConfig config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.any_max_len = j.at("any_max_len").get<bool>();
    return c;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) {
        throw UsageError("batch_size must be at least 1");
    }
    if (epochs < 0) {
        throw UsageError("epochs must be non-negative");
    }
    if (!(learning_rate >= 0.0)) {
        throw UsageError("learning_rate must be non-negative");
    }
    if (!(weight_decay >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(epsilon > 0.0)) {
        throw UsageError("invalid AdamW settings");
    }
}

AdamW::AdamW(const EncoderModel& model, const TrainConfig& tc)
    : tc_(tc), m_(model.params().size(), 0.0), v_(model.params().size(), 0.0), decay_(model.params().size(), 0) {
    for (const auto& b : model.layout()) {
        if (b.decay) {
            std::fill_n(decay_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), 1);
        }
    }
}

void AdamW::step(EncoderModel& model, const std::vector<double>& grad) {
    auto& p = model.params();
    if (grad.size() != p.size()) {
        throw Error("gradient size does not match the parameter count");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(tc_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(tc_.beta2, static_cast<double>(t_));
    const double lr = tc_.learning_rate;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = grad[i];
        m_[i] = tc_.beta1 * m_[i] + (1.0 - tc_.beta1) * g;
        v_[i] = tc_.beta2 * v_[i] + (1.0 - tc_.beta2) * g * g;
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        double update = mhat / (std::sqrt(vhat) + tc_.epsilon);
        if (decay_[i]) {
            update += tc_.weight_decay * p[i];
        }
        p[i] -= lr * update;
    }
}

std::string LossCurve::to_csv() const {
    std::string out = "epoch,train_loss,val_loss\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_loss) + "\n";
    }
    return out;
}

LossCurve train(EncoderModel& model, const LabeledSequences& train_set, const LabeledSequences& val_set,
                const TrainConfig& tc, const EpochCallback& on_epoch) {
    tc.validate();
    if (train_set.size() == 0) {
        throw Error("the training split is empty");
    }
    if (train_set.inputs.size() != train_set.labels.size() || val_set.inputs.size() != val_set.labels.size()) {
        throw Error("inputs and labels differ in length");
    }
    AdamW opt(model, tc);
    LossCurve curve;
    std::vector<double> grad;
    std::vector<std::size_t> order(train_set.size());
    std::uint64_t step = 0;
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = Rng::derive(tc.seed, 0x5EFF, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            std::vector<Encoding> batch;
            std::vector<int> labels;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_set.inputs[order[i]]);
                labels.push_back(train_set.labels[order[i]]);
            }
            ForwardOptions fo;
            fo.training = true;
            fo.dropout_seed = Rng::derive(tc.seed, 0xD40, step).next();
            const double loss = loss_and_gradient(model, batch, labels, grad, fo);
            loss_sum += loss * static_cast<double>(batch.size());
            opt.step(model, grad);
            ++step;
        }
        EpochLoss e;
        e.epoch = epoch;
        e.train_loss = loss_sum / static_cast<double>(train_set.size());
        e.val_loss = val_set.size() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : mean_loss(model, val_set.inputs, val_set.labels);
        curve.epochs.push_back(e);
        if (on_epoch) {
            on_epoch(e);
        }
    }
    return curve;
}

std::string EncoderModel::checkpoint_header_json() const {
    nlohmann::ordered_json j;
    j["config"] = config_json(cfg_);
    auto tensors = nlohmann::ordered_json::array();
    for (const auto& b : layout_) {
        tensors.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    }
    j["tensors"] = std::move(tensors);
    return j.dump();
}

std::string EncoderClassifier::serialize() const {
    auto header = nlohmann::ordered_json::parse(model.checkpoint_header_json());
    header["tokenizer"] = nlohmann::ordered_json::parse(tokenizer.to_json());
    std::string out(kCheckpointMagic);
    out += '\n';
    out += header.dump();
    out += '\n';
    const auto& p = model.params();
    const std::size_t start = out.size();
    out.resize(start + p.size() * sizeof(double));
    std::memcpy(out.data() + start, p.data(), p.size() * sizeof(double));
    return out;
}

EncoderClassifier EncoderClassifier::deserialize(std::string_view bytes) {
    const auto nl1 = bytes.find('\n');
    if (nl1 == std::string_view::npos || bytes.substr(0, nl1) != kCheckpointMagic) {
        throw ParseError("not an inflacast encoder checkpoint (bad header)");
    }
    const auto nl2 = bytes.find('\n', nl1 + 1);
    if (nl2 == std::string_view::npos) {
        throw ParseError("encoder checkpoint is truncated");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("encoder checkpoint header: ") + e.what());
    }
    EncoderModel model(config_from_json(header.at("config")));
    const auto& tensors = header.at("tensors");
    if (tensors.size() != model.layout().size()) {
        throw ParseError("encoder checkpoint lists " + std::to_string(tensors.size()) + " tensors, expected " +
                         std::to_string(model.layout().size()));
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& b = model.layout()[i];
        if (tensors[i].at("name").get<std::string>() != b.name || tensors[i].at("rows").get<std::size_t>() != b.rows ||
            tensors[i].at("cols").get<std::size_t>() != b.cols) {
            throw ParseError("encoder checkpoint tensor " + std::to_string(i) + " does not match '" + b.name + "'");
        }
    }
    const auto payload = bytes.substr(nl2 + 1);
    auto& p = model.params();
    if (payload.size() != p.size() * sizeof(double)) {
        throw ParseError("encoder checkpoint holds " + std::to_string(payload.size()) + " parameter bytes, expected " +
                         std::to_string(p.size() * sizeof(double)));
    }
    std::memcpy(p.data(), payload.data(), payload.size());
    auto tokenizer = SubwordTokenizer::from_json(header.at("tokenizer").dump());
    if (tokenizer.vocab_size() > model.config().vocab_size) {
        throw ParseError("tokenizer has more symbols than the model's vocabulary");
    }
    return {std::move(tokenizer), std::move(model)};
}

void EncoderClassifier::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

EncoderClassifier EncoderClassifier::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace inflacast::encoder
