#include "slimnet/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "slimnet/errors.hpp"

namespace slimnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'L', 'I', 'M', 'N', 'E', 'T', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_doubles(std::span<const double> v) {
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void put_bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(std::span<double> v) {
    need(v.size() * sizeof(double));
    std::memcpy(v.data(), bytes_.data() + pos_, v.size() * sizeof(double));
    pos_ += v.size() * sizeof(double);
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) throw DataError("checkpoint is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.layers.size()));
  for (const auto& l : ckpt.params.layers) {
    w.put<std::uint64_t>(l.in_dim());
    w.put<std::uint64_t>(l.out_dim());
    w.put<std::uint8_t>(l.activation == Activation::relu ? 0 : 1);
    w.put<std::uint8_t>(l.batch_norm ? 1 : 0);
    w.put<std::uint8_t>(l.bias.empty() ? 0 : 1);
    w.put<std::uint8_t>(0);
    w.put_doubles(l.weights.values());
    if (!l.bias.empty()) w.put_doubles(l.bias);
    if (l.batch_norm) {
      w.put_doubles(l.bn_scale);
      w.put_doubles(l.bn_shift);
      w.put_doubles(l.running_mean);
      w.put_doubles(l.running_var);
    }
  }
  w.put<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const AdamState& s = *ckpt.optimizer;
    w.put<std::uint64_t>(s.step);
    w.put<double>(s.hyper.lr);
    w.put<double>(s.hyper.beta1);
    w.put<double>(s.hyper.beta2);
    w.put<double>(s.hyper.eps);
    for (std::size_t li = 0; li < s.m.layers.size(); ++li) {
      const auto& m = s.m.layers[li];
      const auto& v = s.v.layers[li];
      w.put_doubles(m.weights.values());
      w.put_doubles(v.weights.values());
      w.put_doubles(m.bias);
      w.put_doubles(v.bias);
      w.put_doubles(m.bn_scale);
      w.put_doubles(v.bn_scale);
      w.put_doubles(m.bn_shift);
      w.put_doubles(v.bn_shift);
    }
  }
  w.put<std::uint64_t>(ckpt.metadata.size());
  w.put_bytes(ckpt.metadata.data(), ckpt.metadata.size());
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw DataError("not a slimnet checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto depth = r.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t li = 0; li < depth; ++li) {
    const auto in = r.get<std::uint64_t>();
    const auto out = r.get<std::uint64_t>();
    const auto act = r.get<std::uint8_t>();
    const auto bn = r.get<std::uint8_t>();
    const auto has_bias = r.get<std::uint8_t>();
    r.get<std::uint8_t>();
    if (act > 1 || bn > 1 || has_bias > 1) throw DataError("corrupt layer header in checkpoint");
    if (in == 0 || out == 0 || in > r.remaining() || out > r.remaining() || in * out > r.remaining() / sizeof(double))
      throw DataError("implausible layer dimensions in checkpoint");
    Layer l;
    l.activation = act == 0 ? Activation::relu : Activation::identity;
    l.batch_norm = bn == 1;
    l.weights = Matrix(in, out);
    r.get_doubles(l.weights.values());
    if (has_bias) {
      l.bias.resize(out);
      r.get_doubles(l.bias);
    }
    if (l.batch_norm) {
      for (Vector* v : {&l.bn_scale, &l.bn_shift, &l.running_mean, &l.running_var}) {
        v->resize(out);
        r.get_doubles(*v);
      }
    }
    if (li > 0 && ckpt.params.layers.back().out_dim() != in) throw DataError("checkpoint layers do not chain");
    ckpt.params.layers.push_back(std::move(l));
  }
  if (r.get<std::uint8_t>()) {
    AdamState s = AdamState::fresh(ckpt.params);
    s.step = r.get<std::uint64_t>();
    s.hyper.lr = r.get<double>();
    s.hyper.beta1 = r.get<double>();
    s.hyper.beta2 = r.get<double>();
    s.hyper.eps = r.get<double>();
    for (std::size_t li = 0; li < s.m.layers.size(); ++li) {
      auto& m = s.m.layers[li];
      auto& v = s.v.layers[li];
      r.get_doubles(m.weights.values());
      r.get_doubles(v.weights.values());
      r.get_doubles(m.bias);
      r.get_doubles(v.bias);
      r.get_doubles(m.bn_scale);
      r.get_doubles(v.bn_scale);
      r.get_doubles(m.bn_shift);
      r.get_doubles(v.bn_shift);
    }
    ckpt.optimizer = std::move(s);
  }
  const auto meta_len = r.get<std::uint64_t>();
  ckpt.metadata = r.get_bytes(static_cast<std::size_t>(meta_len));
  if (!r.at_end()) throw DataError("trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace slimnet
