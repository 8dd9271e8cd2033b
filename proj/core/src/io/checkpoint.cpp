#include "cdpauth/io/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "cdpauth/error.hpp"
#include "cdpauth/io/files.hpp"

namespace cdpauth::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

using nlohmann::json;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, std::string_view s) {
  put<std::uint64_t>(out, s.size());
  out.append(s);
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  void get_doubles(double* dst, std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(double)) truncated();
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(std::string(source_) + ": " + what);
  }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) truncated();
  }
  [[noreturn]] void truncated() const { fail("truncated checkpoint"); }

  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

json metadata_of(const Checkpoint& c) {
  try {
    return json::parse(c.metadata);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
}

template <typename T>
T meta(const json& m, const char* key) {
  const auto it = m.find(key);
  if (it == m.end()) throw FormatError(std::string("checkpoint metadata lacks '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("checkpoint metadata '") + key + "' has the wrong type");
  }
}

void expect_kind(const Checkpoint& c, CheckpointKind kind) {
  if (c.kind != kind)
    throw FormatError("checkpoint holds a " + std::string(to_string(c.kind)) + ", expected a " +
                      std::string(to_string(kind)));
}

const nn::Tensor& tensor(const Checkpoint& c, const std::string& name) {
  const nn::Tensor* t = c.find(name);
  if (!t) throw FormatError("checkpoint lacks tensor '" + name + "'");
  return *t;
}

void add_parameters(Checkpoint& c, const nn::ParameterList& params) {
  for (const auto* p : params) c.tensors.emplace_back(p->name(), p->value());
}

void load_parameters(const Checkpoint& c, const nn::ParameterList& params) {
  for (auto* p : params) {
    const nn::Tensor& t = tensor(c, p->name());
    if (t.shape() != p->value().shape())
      throw FormatError("tensor '" + p->name() + "' has shape " + nn::to_string(t.shape()) +
                        ", the model expects " + nn::to_string(p->value().shape()));
    p->value() = t;
  }
}

nn::Tensor vector_tensor(const std::vector<double>& v) { return nn::Tensor({v.size()}, v); }

std::vector<double> tensor_vector(const nn::Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

void add_history(Checkpoint& c, json& m, const TrainingHistory& h) {
  c.tensors.emplace_back("history.train_loss", vector_tensor(h.train_loss));
  c.tensors.emplace_back("history.val_loss", vector_tensor(h.val_loss));
  m["best_epoch"] = h.best_epoch;
}

TrainingHistory read_history(const Checkpoint& c, const json& m) {
  TrainingHistory h;
  h.train_loss = tensor_vector(tensor(c, "history.train_loss"));
  h.val_loss = tensor_vector(tensor(c, "history.val_loss"));
  h.best_epoch = meta<std::size_t>(m, "best_epoch");
  return h;
}

json geometry_json(const nn::ImageGeometry& g) {
  return {{"channels", g.channels}, {"height", g.height}, {"width", g.width}};
}

nn::ImageGeometry geometry_from(const json& m, const char* key) {
  const auto g = meta<json>(m, key);
  return {meta<std::size_t>(g, "channels"), meta<std::size_t>(g, "height"),
          meta<std::size_t>(g, "width")};
}

}  // namespace

std::string_view to_string(CheckpointKind k) {
  switch (k) {
    case CheckpointKind::classifier: return "classifier";
    case CheckpointKind::extractor: return "extractor";
    case CheckpointKind::ocsvm: return "ocsvm";
  }
  return "unknown";
}

const nn::Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, c.version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
  put_string(out, c.metadata);
  put<std::uint64_t>(out, c.tensors.size());
  for (const auto& [name, t] : c.tensors) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, std::string_view source) {
  Reader r(bytes, source);
  if (bytes.size() < sizeof kCheckpointMagic ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    r.fail("not a checkpoint (bad magic bytes)");
  for (std::size_t i = 0; i < sizeof kCheckpointMagic; ++i) r.get<char>();
  Checkpoint c;
  c.version = r.get<std::uint32_t>();
  if (c.version != kCheckpointVersion)
    r.fail("checkpoint format version " + std::to_string(c.version) + " is not supported (expected " +
           std::to_string(kCheckpointVersion) + ")");
  const auto kind = r.get<std::uint32_t>();
  if (kind < 1 || kind > 3) r.fail("unknown checkpoint kind " + std::to_string(kind));
  c.kind = static_cast<CheckpointKind>(kind);
  c.metadata = r.get_string();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    nn::Shape shape;
    std::size_t size = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      shape.push_back(r.get<std::uint64_t>());
      if (shape.back() != 0 && size > (std::size_t{1} << 40) / shape.back())
        r.fail("tensor '" + name + "' is implausibly large");
      size *= shape.back();
    }
    std::vector<double> values(size);
    r.get_doubles(values.data(), size);
    c.tensors.emplace_back(std::move(name), nn::Tensor(std::move(shape), std::move(values)));
  }
  if (!r.at_end()) r.fail("trailing bytes after the last tensor");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

std::string checkpoint_config_hash(const Checkpoint& ckpt) {
  const json m = metadata_of(ckpt);
  const auto it = m.find("config_hash");
  return it != m.end() && it->is_string() ? it->get<std::string>() : std::string();
}

// ---- classifier ----

Checkpoint classifier_checkpoint(const ClassifierModel& model, const std::string& config_hash) {
  Checkpoint c;
  c.kind = CheckpointKind::classifier;
  ClassifierModel copy = model;
  add_parameters(c, copy.network.parameters());
  const auto& cfg = model.network.config();
  json m = {{"config_hash", config_hash},
            {"setup", std::string(to_string(model.setup))},
            {"seed", model.seed},
            {"epochs_run", model.epochs_run},
            {"input", geometry_json(cfg.input)},
            {"widths", cfg.widths},
            {"classes", cfg.classes}};
  add_history(c, m, model.history);
  c.metadata = m.dump();
  return c;
}

ClassifierModel classifier_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, CheckpointKind::classifier);
  const json m = metadata_of(c);
  ClassifierModel model;
  const auto setup = parse_supervised_setup(meta<std::string>(m, "setup"));
  if (!setup) throw FormatError("checkpoint names an unknown supervised setup");
  model.setup = *setup;
  model.seed = meta<std::uint64_t>(m, "seed");
  model.epochs_run = meta<std::size_t>(m, "epochs_run");
  nn::ConvClassifier::Config cfg;
  cfg.input = geometry_from(m, "input");
  cfg.widths = meta<std::array<std::size_t, 3>>(m, "widths");
  cfg.classes = meta<std::size_t>(m, "classes");
  model.network = nn::ConvClassifier(cfg, 0);
  load_parameters(c, model.network.parameters());
  model.history = read_history(c, m);
  return model;
}

// ---- extractor ----

Checkpoint extractor_checkpoint(const TrainedExtractor& extractor, const std::string& config_hash) {
  Checkpoint c;
  c.kind = CheckpointKind::extractor;
  TrainedExtractor copy = extractor;
  const ExtractorModel& e = extractor.model;
  add_parameters(c, copy.model.encoder.parameters());
  add_parameters(c, copy.model.decoder.parameters());
  json m = {{"config_hash", config_hash},
            {"variant", std::string(to_string(e.variant))},
            {"seed", e.seed},
            {"epochs_run", e.epochs_run},
            {"probe_geometry", geometry_json(e.probe_geometry)},
            {"base_width", e.encoder.config().base_width},
            {"has_discriminators", extractor.discriminators.has_value()}};
  if (copy.discriminators) {
    add_parameters(c, copy.discriminators->template_disc.parameters());
    add_parameters(c, copy.discriminators->print_disc.parameters());
    m["discriminator_width"] = extractor.discriminators->template_disc.config().width;
  }
  c.tensors.emplace_back("beta", nn::Tensor::scalar(e.beta));
  add_history(c, m, e.history);
  c.metadata = m.dump();
  return c;
}

TrainedExtractor extractor_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, CheckpointKind::extractor);
  const json m = metadata_of(c);
  const auto variant = parse_extractor_variant(meta<std::string>(m, "variant"));
  if (!variant) throw FormatError("checkpoint names an unknown extractor variant");
  const nn::Tensor& beta = tensor(c, "beta");
  if (beta.size() != 1) throw FormatError("checkpoint tensor 'beta' must be a scalar");
  ExtractorHyper hyper;
  hyper.seed = meta<std::uint64_t>(m, "seed");
  hyper.base_width = meta<std::size_t>(m, "base_width");
  const auto geometry = geometry_from(m, "probe_geometry");
  TrainedExtractor out;
  out.model = make_extractor(geometry, *variant, beta[0], hyper);
  out.model.epochs_run = meta<std::size_t>(m, "epochs_run");
  load_parameters(c, out.model.encoder.parameters());
  load_parameters(c, out.model.decoder.parameters());
  if (meta<bool>(m, "has_discriminators")) {
    hyper.discriminator_width = meta<std::size_t>(m, "discriminator_width");
    out.discriminators = make_discriminators(geometry, hyper);
    load_parameters(c, out.discriminators->template_disc.parameters());
    load_parameters(c, out.discriminators->print_disc.parameters());
  }
  out.model.history = read_history(c, m);
  return out;
}

// ---- OC-SVM ----

Checkpoint ocsvm_checkpoint(const OcSvmArtifact& a, const std::string& config_hash) {
  Checkpoint c;
  c.kind = CheckpointKind::ocsvm;
  const OcSvmModel& s = a.model;
  const std::size_t dims = s.dims();
  std::vector<double> sv;
  sv.reserve(s.support_vectors.size() * dims);
  for (const auto& row : s.support_vectors) sv.insert(sv.end(), row.begin(), row.end());
  c.tensors.emplace_back("support_vectors",
                         nn::Tensor({s.support_vectors.size(), dims}, std::move(sv)));
  c.tensors.emplace_back("alphas", vector_tensor(s.alphas));
  c.tensors.emplace_back("rho", nn::Tensor::scalar(s.rho));
  c.tensors.emplace_back("nu", nn::Tensor::scalar(s.nu));
  c.tensors.emplace_back("kernel_gamma", nn::Tensor::scalar(s.kernel.gamma));
  c.tensors.emplace_back("standardizer.mean", vector_tensor(s.standardizer.mean));
  c.tensors.emplace_back("standardizer.scale", vector_tensor(s.standardizer.scale));
  const json m = {{"config_hash", config_hash},
                  {"kernel", std::string(to_string(s.kernel.type))},
                  {"training_size", s.training_size},
                  {"feature_setup", setup_number(a.setup)},
                  {"statistic", std::string(to_string(a.statistic))}};
  c.metadata = m.dump();
  return c;
}

OcSvmArtifact ocsvm_from_checkpoint(const Checkpoint& c) {
  expect_kind(c, CheckpointKind::ocsvm);
  const json m = metadata_of(c);
  OcSvmArtifact a;
  const auto setup = feature_setup_from_number(meta<int>(m, "feature_setup"));
  const auto statistic = parse_discriminator_statistic(meta<std::string>(m, "statistic"));
  const auto kernel = parse_kernel_type(meta<std::string>(m, "kernel"));
  if (!setup || !statistic || !kernel)
    throw FormatError("checkpoint OC-SVM metadata holds an unknown name");
  a.setup = *setup;
  a.statistic = *statistic;
  OcSvmModel& s = a.model;
  s.kernel.type = *kernel;
  s.training_size = meta<std::size_t>(m, "training_size");
  auto scalar = [&](const char* name) {
    const nn::Tensor& t = tensor(c, name);
    if (t.size() != 1) throw FormatError(std::string("checkpoint tensor '") + name + "' must be a scalar");
    return t[0];
  };
  s.rho = scalar("rho");
  s.nu = scalar("nu");
  s.kernel.gamma = scalar("kernel_gamma");
  s.alphas = tensor_vector(tensor(c, "alphas"));
  s.standardizer.mean = tensor_vector(tensor(c, "standardizer.mean"));
  s.standardizer.scale = tensor_vector(tensor(c, "standardizer.scale"));
  const nn::Tensor& sv = tensor(c, "support_vectors");
  const std::size_t dims = s.standardizer.mean.size();
  if (sv.rank() != 2 || sv.dim(0) != s.alphas.size() || sv.dim(1) != dims ||
      s.standardizer.scale.size() != dims)
    throw FormatError("checkpoint OC-SVM tensors have inconsistent shapes: support_vectors " +
                      nn::to_string(sv.shape()) + ", " + std::to_string(s.alphas.size()) +
                      " alphas, " + std::to_string(dims) + " feature dims");
  for (std::size_t i = 0; i < sv.dim(0); ++i)
    s.support_vectors.emplace_back(sv.data() + i * dims, sv.data() + (i + 1) * dims);
  return a;
}

}  // namespace cdpauth::io
