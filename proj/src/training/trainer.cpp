#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "scs/checkpoint.hpp"
#include "scs/training.hpp"

namespace scs::training {

using model::Mode;

ModeSchedule parse_schedule(const std::string& text) {
  if (text == "alternate") return ModeSchedule::kAlternate;
  if (text == "auto") return ModeSchedule::kAuto;
  if (text == "ref") return ModeSchedule::kRef;
  throw std::invalid_argument("unknown mode schedule '" + text + "' (expected alternate, auto or ref)");
}

const char* to_string(ModeSchedule s) {
  switch (s) {
    case ModeSchedule::kAuto: return "auto";
    case ModeSchedule::kRef: return "ref";
    default: return "alternate";
  }
}

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1 && max_steps < 1) throw std::invalid_argument("epochs or max_steps must be >= 1");
  if (!(scale > 1.0)) throw std::invalid_argument("training scale must exceed 1");
  if (!(optim.lr > 0) || !(optim.beta1 >= 0 && optim.beta1 < 1) || !(optim.beta2 >= 0 && optim.beta2 < 1) ||
      !(optim.eps > 0) || !(optim.weight_decay >= 0)) {
    throw std::invalid_argument("invalid optimizer constants");
  }
}

std::string format_log_line(const StepLog& l) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld, %s, %.9g, %.9g, %.9g, %.9g, %.9g", static_cast<long long>(l.step),
                model::to_string(l.mode), l.content, l.perceptual, l.adv_g, l.adv_d, l.total);
  return buf;
}

StepLog parse_log_line(const std::string& line) {
  std::istringstream in(line);
  StepLog l;
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(' ');
    fields.push_back(b == std::string::npos ? "" : field.substr(b));
  }
  if (fields.size() != 7) throw std::invalid_argument("malformed log line: " + line);
  l.step = std::stoll(fields[0]);
  l.mode = model::parse_mode(fields[1]);
  l.content = std::stod(fields[2]);
  l.perceptual = std::stod(fields[3]);
  l.adv_g = std::stod(fields[4]);
  l.adv_d = std::stod(fields[5]);
  l.total = std::stod(fields[6]);
  return l;
}

Tensor<float> stack(const std::vector<const imaging::Image*>& images) {
  if (images.empty()) throw ShapeError("stack: no images");
  const auto& first = *images.front();
  std::vector<float> data;
  data.reserve(first.data.size() * images.size());
  for (const auto* img : images) {
    if (img->channels != first.channels || img->height != first.height || img->width != first.width) {
      throw ShapeError("stack: image sizes differ");
    }
    data.insert(data.end(), img->data.begin(), img->data.end());
  }
  return Tensor<float>(Shape{static_cast<std::int64_t>(images.size()), first.channels, first.height, first.width},
                       std::move(data));
}

namespace {

std::vector<imaging::SamplePair> build_pairs(TrainConfig& config, const std::vector<imaging::RgbImage>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  config.validate();
  std::vector<imaging::SamplePair> pairs;
  pairs.reserve(dataset.size());
  for (const auto& img : dataset) {
    pairs.push_back(imaging::make_pair(img, config.scale));
    const auto& p = pairs.back();
    if (p.source_l.height != pairs.front().source_l.height || p.source_l.width != pairs.front().source_l.width) {
      throw std::invalid_argument("training images must share one size");
    }
  }
  config.model.input_height = static_cast<int>(pairs.front().source_l.height);
  config.model.input_width = static_cast<int>(pairs.front().source_l.width);
  config.validate();
  return pairs;
}

std::vector<std::string> with_prefix_names(const ParamStore<float>& store, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& e : store.entries()) {
    if (e.name.rfind(prefix, 0) == 0) out.push_back(e.name);
  }
  return out;
}

void export_optimizer(const AdamW<float>& opt, const std::string& tag, Checkpoint& ckpt) {
  nlohmann::json steps = nlohmann::json::object();
  for (const auto& [name, slot] : opt.slots()) {
    const Shape shape{static_cast<std::int64_t>(slot.m.size())};
    ckpt.tensors.emplace_back("opt/" + tag + "/m/" + name, Tensor<float>(shape, slot.m));
    ckpt.tensors.emplace_back("opt/" + tag + "/v/" + name, Tensor<float>(shape, slot.v));
    steps[name] = slot.steps;
  }
  ckpt.meta["opt_steps"][tag] = steps;
}

void import_optimizer(AdamW<float>& opt, const std::string& tag, const Checkpoint& ckpt) {
  opt.slots().clear();
  for (const auto& [name, steps] : ckpt.meta.at("opt_steps").at(tag).items()) {
    auto& slot = opt.slots()[name];
    const auto& m = ckpt.get("opt/" + tag + "/m/" + name);
    const auto& v = ckpt.get("opt/" + tag + "/v/" + name);
    slot.m.assign(m.data().begin(), m.data().end());
    slot.v.assign(v.data().begin(), v.data().end());
    slot.steps = steps.get<std::int64_t>();
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::vector<imaging::RgbImage> dataset)
    : config_(std::move(config)),
      pairs_(build_pairs(config_, dataset)),
      net_(config_.model, derive_seed(config_.seed, 1)),
      surrogate_(config_.perceptual_seed),
      g_opt_(config_.optim),
      d_opt_(config_.optim) {}

std::int64_t Trainer::steps_per_epoch() const {
  const auto n = static_cast<std::int64_t>(pairs_.size());
  return (n + config_.batch_size - 1) / config_.batch_size;
}

std::int64_t Trainer::total_steps() const {
  return config_.max_steps > 0 ? config_.max_steps : config_.epochs * steps_per_epoch();
}

Mode Trainer::mode_for_step(std::int64_t step) const {
  switch (config_.schedule) {
    case ModeSchedule::kAuto: return Mode::kAuto;
    case ModeSchedule::kRef: return Mode::kRef;
    default: return step % 2 == 1 ? Mode::kAuto : Mode::kRef;
  }
}

std::vector<std::size_t> Trainer::batch_indices(std::int64_t step) const {
  const std::int64_t spe = steps_per_epoch();
  const std::int64_t epoch = (step - 1) / spe, pos = (step - 1) % spe;
  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config_.seed, 2, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto begin = static_cast<std::size_t>(pos * config_.batch_size);
  const auto end = std::min(order.size(), begin + static_cast<std::size_t>(config_.batch_size));
  return {order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end)};
}

Batch Trainer::make_batch(std::int64_t step) const {
  const auto idx = batch_indices(step);
  std::vector<const imaging::Image*> src, tgt, ref;
  std::vector<imaging::LabImage> refs;
  refs.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& p = pairs_[idx[k]];
    src.push_back(&p.source_l);
    tgt.push_back(&p.target);
    const auto seed = derive_seed(config_.seed, 3, static_cast<std::uint64_t>(step) * 4096 + k);
    refs.push_back(imaging::augment_reference(p.source_lab, seed, config_.augment));
  }
  for (const auto& r : refs) ref.push_back(&r);
  return {stack(src), stack(ref), stack(tgt)};
}

StepLog Trainer::step() {
  const std::int64_t s = step_ + 1;
  const Mode mode = mode_for_step(s);
  const Batch batch = make_batch(s);
  auto& params = net_.params();
  const auto& gen = net_.generator();
  const auto& disc = net_.discriminator();

  StepLog log;
  log.step = s;
  log.mode = mode;
  params.clear_grad();

  Tape<float> g_tape;
  TapeScope<float> g_scope(g_tape);
  const std::optional<Tensor<float>> ref =
      mode == Mode::kRef ? std::optional<Tensor<float>>(batch.reference) : std::nullopt;
  const auto fake = gen.forward(batch.source_l, ref, mode, config_.scale);

  {
    Tape<float> d_tape;
    TapeScope<float> d_scope(d_tape);
    const auto l_d = adversarial_losses(disc(batch.target), disc(fake.detach()), config_.symmetric_d).discriminator;
    log.adv_d = l_d.item();
    if (!std::isfinite(log.adv_d)) throw DivergenceError("discriminator loss is not finite at step " + std::to_string(s));
    d_tape.backward(l_d);
    d_tape.reset();
  }
  d_opt_.step(params, with_prefix_names(params, "d."));
  params.clear_grad();

  const auto adv = adversarial_losses(disc(batch.target), disc(fake), config_.symmetric_d);
  const auto content = content_loss(fake, batch.target);
  const auto perceptual = perceptual_loss(fake, batch.target, surrogate_, config_.loss.layers).total;
  const auto total = total_loss(content, perceptual, adv.generator, config_.loss);
  log.content = content.item();
  log.perceptual = perceptual.item();
  log.adv_g = adv.generator.item();
  log.total = total.total.item();
  if (!std::isfinite(log.total)) {
    throw DivergenceError("total loss is not finite at step " + std::to_string(s) + ": " + format_log_line(log));
  }
  g_tape.backward(total.total);
  g_tape.reset();
  g_opt_.step(params, net_.generator_param_names(mode));
  params.clear_grad();
  step_ = s;
  return log;
}

std::vector<StepLog> Trainer::run(std::int64_t limit, const std::function<void(const StepLog&)>& on_step) {
  std::vector<StepLog> logs;
  while (!done() && (limit < 0 || static_cast<std::int64_t>(logs.size()) < limit)) {
    logs.push_back(step());
    if (on_step) on_step(logs.back());
  }
  return logs;
}

void Trainer::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.meta["model"] = to_json(config_.model);
  ckpt.meta["step"] = step_;
  ckpt.meta["seed"] = config_.seed;
  ckpt.meta["scale"] = config_.scale;
  export_params(net_.params(), ckpt);
  export_optimizer(g_opt_, "g", ckpt);
  export_optimizer(d_opt_, "d", ckpt);
  write_checkpoint(path, ckpt);
}

void Trainer::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.meta.at("model") != to_json(config_.model)) {
    throw CheckpointError(path.string() + ": model configuration differs from the training configuration");
  }
  import_params(net_.params(), ckpt);
  import_optimizer(g_opt_, "g", ckpt);
  import_optimizer(d_opt_, "d", ckpt);
  step_ = ckpt.meta.at("step").get<std::int64_t>();
}

}  // namespace scs::training
