#include "led/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace led {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kMagic[8] = {'L', 'E', 'D', 'P', 'A', 'R', 'M', '\0'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(os, bits);
  }
}

std::vector<double> read_doubles(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bits = read_u64(is);
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t d : t.shape()) write_u64(os, d);
  write_doubles(os, t.flat());
}

Tensor read_tensor(std::istream& is) {
  const std::uint32_t ndim = read_u32(is);
  std::vector<std::size_t> shape(ndim);
  for (auto& d : shape) d = static_cast<std::size_t>(read_u64(is));
  auto data = read_doubles(is, shape_product(shape));
  return Tensor(std::move(shape), std::move(data));
}

void serialize(const ParamStore& store, std::ostream& os) {
  os.write(kMagic, 8);
  write_u32(os, kFormatVersion);
  write_u64(os, store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    const Param& p = store.param(i);
    write_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(os, p.trainable ? 1 : 0);
    write_u64(os, p.step);
    write_tensor(os, p.value);
    write_tensor(os, p.moment1);
    write_tensor(os, p.moment2);
  }
}

}  // namespace

Param& ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name)) fail_validation("ParamStore: duplicate parameter " + name);
  Param p;
  p.name = name;
  p.moment1 = Tensor::zeros(init.shape());
  p.moment2 = Tensor::zeros(init.shape());
  p.value = std::move(init);
  p.trainable = trainable;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail_validation("ParamStore: unknown parameter " + name);
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail_validation("ParamStore: unknown parameter " + name);
  return params_[it->second];
}

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("ParamStore: cannot open " + path + " for writing");
  serialize(*this, os);
  if (!os) throw IoError("ParamStore: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("ParamStore: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("ParamStore: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kFormatVersion) {
    throw IoError("ParamStore: unsupported format version " + std::to_string(version));
  }
  const std::uint64_t count = read_u64(is);
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    const bool trainable = read_u32(is) != 0;
    const std::uint64_t step = read_u64(is);
    Tensor value = read_tensor(is);
    Tensor m1 = read_tensor(is);
    Tensor m2 = read_tensor(is);
    if (!is) throw IoError("ParamStore: truncated file " + path);
    Param& p = store.add(name, std::move(value), trainable);
    p.moment1 = std::move(m1);
    p.moment2 = std::move(m2);
    p.step = step;
  }
  return store;
}

std::uint64_t ParamStore::content_hash() const {
  std::ostringstream os(std::ios::binary);
  serialize(*this, os);
  return fnv1a64(os.str());
}

void adam_step(ParamStore& store, const std::vector<Tensor>& grads, const AdamConfig& cfg) {
  std::size_t gi = 0;
  for (std::size_t i = 0; i < store.count(); ++i) {
    Param& p = store.param(i);
    if (!p.trainable) continue;
    if (gi >= grads.size()) fail_validation("adam_step: missing gradients");
    const Tensor& g = grads[gi++];
    if (!g.same_shape(p.value)) {
      fail_validation("adam_step: gradient shape " + g.shape_str() + " does not match " +
                      p.name + " " + p.value.shape_str());
    }
    p.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
    double* v = p.value.data();
    double* m1 = p.moment1.data();
    double* m2 = p.moment2.data();
    const double* gd = g.data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * gd[k];
      m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * gd[k] * gd[k];
      const double mhat = m1[k] / bc1;
      const double vhat = m2[k] / bc2;
      v[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  if (gi != grads.size()) fail_validation("adam_step: gradient count mismatch");
}

}  // namespace led
