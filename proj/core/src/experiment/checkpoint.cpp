#include "mdr/experiment/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mdr/error.hpp"

namespace mdr {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'M', 'D', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void tensor(const Tensor& t) {
    pod<std::uint64_t>(t.rank());
    for (std::size_t d : t.shape()) pod<std::uint64_t>(d);
    out_.write(reinterpret_cast<const char*>(t.data().data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  template <typename T>
  T pod() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) fail("truncated file");
    return value;
  }
  std::uint64_t count() {
    const auto n = pod<std::uint64_t>();
    if (n > kMaxCount) fail("implausible length " + std::to_string(n));
    return n;
  }
  std::string str() {
    std::string s(count(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) fail("truncated string");
    return s;
  }
  Tensor tensor() {
    const std::uint64_t rank = count();
    if (rank > 2) fail("tensor rank " + std::to_string(rank) + " unsupported");
    Shape shape(rank);
    for (auto& d : shape) d = count();
    Tensor t(shape);
    in_.read(reinterpret_cast<char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in_) fail("truncated tensor");
    return t;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint " + name_ + ": " + what);
  }

 private:
  std::istream& in_;
  std::string name_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(Checkpoint::kVersion);
  w.str(ck.config_ini);
  w.pod<std::uint64_t>(ck.seed);
  w.pod<std::int64_t>(ck.step);

  w.pod<std::uint64_t>(ck.params.size());
  for (const Parameter& p : ck.params.parameters()) {
    w.str(p.name);
    w.pod<std::uint8_t>(p.weight_decay ? 1 : 0);
    w.tensor(p.value);
  }

  w.pod<std::int64_t>(ck.adam.step);
  w.pod<std::uint64_t>(ck.adam.first_moment.size());
  for (const auto& [name, m] : ck.adam.first_moment) {
    w.str(name);
    w.tensor(m);
    auto v = ck.adam.second_moment.find(name);
    w.tensor(v != ck.adam.second_moment.end() ? v->second : Tensor(m.shape()));
  }

  w.pod<double>(ck.stats.gamma());
  w.pod<double>(ck.stats.mean());
  w.pod<double>(ck.stats.stddev());
  w.pod<std::uint8_t>(ck.stats.initialized() ? 1 : 0);
  w.str(ck.sampler_rng_state);
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
  const auto version = r.pod<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.config_ini = r.str();
  ck.seed = r.pod<std::uint64_t>();
  ck.step = r.pod<std::int64_t>();

  const std::uint64_t n_params = r.count();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.str();
    const bool decay = r.pod<std::uint8_t>() != 0;
    ck.params.add(std::move(name), r.tensor(), decay);
  }

  ck.adam.step = r.pod<std::int64_t>();
  const std::uint64_t n_moments = r.count();
  for (std::uint64_t i = 0; i < n_moments; ++i) {
    std::string name = r.str();
    ck.adam.first_moment.emplace(name, r.tensor());
    ck.adam.second_moment.emplace(name, r.tensor());
  }

  const double gamma = r.pod<double>();
  const double mean = r.pod<double>();
  const double stddev = r.pod<double>();
  const bool initialized = r.pod<std::uint8_t>() != 0;
  ck.stats = DistanceStats::restore(gamma, mean, stddev, initialized);
  ck.sampler_rng_state = r.str();
  return ck;
}

}  // namespace mdr
