#include "argus/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace argus {

namespace {

constexpr char kMagic[8] = {'A', 'R', 'G', 'U', 'S', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  uint32_t n = get<uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_doubles(std::istream& is, std::vector<double>& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, int64_t step,
                     const AdamOptimizer* opt, const CountMinSketch* sketch) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  os.write(kMagic, sizeof(kMagic));
  put_string(os, model.config().digest());
  put<int64_t>(os, step);
  const auto& all = model.params().all();
  put<uint32_t>(os, static_cast<uint32_t>(all.size()));
  for (const auto& p : all) {
    put_string(os, p->name);
    put<int32_t>(os, p->t.rows);
    put<int32_t>(os, p->t.cols);
    put_doubles(os, p->t.v);
  }
  put<uint8_t>(os, opt ? 1 : 0);
  if (opt) {
    put<int64_t>(os, opt->steps_taken());
    put<int64_t>(os, opt->steps_skipped());
    for (const auto& slot : opt->slots()) {
      put_doubles(os, slot.m);
      put_doubles(os, slot.v);
    }
  }
  put<uint8_t>(os, sketch ? 1 : 0);
  if (sketch) {
    put<int32_t>(os, sketch->depth());
    put<int32_t>(os, sketch->width());
    put<uint64_t>(os, sketch->seed());
    put<uint64_t>(os, sketch->total());
    os.write(reinterpret_cast<const char*>(sketch->counters().data()),
             static_cast<std::streamsize>(sketch->counters().size() * sizeof(uint64_t)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CheckpointExtras load_checkpoint(const std::string& path, Model& model, AdamOptimizer* opt,
                                 CountMinSketch* sketch) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::string digest = get_string(is);
  if (digest != model.config().digest())
    throw std::runtime_error("checkpoint: architecture digest mismatch: file has '" + digest +
                             "', model is '" + model.config().digest() + "'");
  CheckpointExtras extras;
  extras.step = get<int64_t>(is);
  uint32_t n = get<uint32_t>(is);
  const auto& all = model.params().all();
  if (n != all.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = get_string(is);
    int32_t rows = get<int32_t>(is);
    int32_t cols = get<int32_t>(is);
    Param* p = all[i].get();
    if (p->name != name || p->t.rows != rows || p->t.cols != cols)
      throw std::runtime_error("checkpoint: tensor mismatch at '" + name + "'");
    get_doubles(is, p->t.v);
  }
  uint8_t has_opt = get<uint8_t>(is);
  if (has_opt) {
    int64_t t = get<int64_t>(is);
    int64_t skipped = get<int64_t>(is);
    std::vector<AdamOptimizer::Slot> slots(n);
    for (uint32_t i = 0; i < n; ++i) {
      slots[i].m.assign(all[i]->t.numel(), 0.0);
      slots[i].v.assign(all[i]->t.numel(), 0.0);
      get_doubles(is, slots[i].m);
      get_doubles(is, slots[i].v);
    }
    if (opt) {
      opt->restore(slots, t, skipped);
      extras.has_optimizer = true;
    }
  }
  uint8_t has_sketch = get<uint8_t>(is);
  if (has_sketch) {
    int32_t depth = get<int32_t>(is);
    int32_t width = get<int32_t>(is);
    uint64_t seed = get<uint64_t>(is);
    uint64_t total = get<uint64_t>(is);
    std::vector<uint64_t> counters(static_cast<size_t>(depth) * width);
    is.read(reinterpret_cast<char*>(counters.data()),
            static_cast<std::streamsize>(counters.size() * sizeof(uint64_t)));
    if (!is) throw std::runtime_error("checkpoint: truncated sketch");
    if (sketch) {
      if (sketch->depth() != depth || sketch->width() != width || sketch->seed() != seed)
        throw std::runtime_error("checkpoint: sketch configuration mismatch");
      sketch->restore(counters, total);
      extras.has_sketch = true;
    }
  }
  return extras;
}

std::string peek_checkpoint_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  return get_string(is);
}

}  // namespace argus
