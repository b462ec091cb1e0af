#include "lguided/precomputed.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "lguided/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace lguided {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'C', 'X'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  char tmp[4];
  std::memcpy(tmp, &v, 4);
  buf.append(tmp, 4);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw IoError(path + ": truncated precomputed-contextual file");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void write_precomputed(const std::string& path, std::size_t context_dim,
                       std::size_t layer_count,
                       const std::vector<PrecomputedDoc>& docs) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(context_dim));
  put_u32(buf, static_cast<std::uint32_t>(layer_count));
  put_u32(buf, static_cast<std::uint32_t>(docs.size()));
  for (const auto& doc : docs) {
    if (doc.layers.size() != layer_count) {
      throw UsageError("write_precomputed: doc '" + doc.doc_id + "' has " +
                       std::to_string(doc.layers.size()) + " layers, expected " +
                       std::to_string(layer_count));
    }
    put_u32(buf, static_cast<std::uint32_t>(doc.doc_id.size()));
    buf.append(doc.doc_id);
    const std::size_t k_len = doc.layers.empty() ? 0 : doc.layers[0].rows;
    put_u32(buf, static_cast<std::uint32_t>(k_len));
    for (const auto& layer : doc.layers) {
      if (layer.rows != k_len || layer.cols != context_dim) {
        throw UsageError("write_precomputed: doc '" + doc.doc_id +
                         "' layer shape " + shape_str(layer) + " does not match " +
                         std::to_string(k_len) + "x" + std::to_string(context_dim));
      }
      for (double x : layer.data) {
        const float f = static_cast<float>(x);
        char tmp[4];
        std::memcpy(tmp, &f, 4);
        buf.append(tmp, 4);
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write precomputed-contextual file: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write on: " + path);
}

PrecomputedStore load_precomputed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open precomputed-contextual file: " + path);
  std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r{buf, 0, path};

  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw IoError(path + ": not a precomputed-contextual file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError(path + ": unsupported container version " +
                  std::to_string(version) + ", expected " + std::to_string(kVersion));
  }
  PrecomputedStore store;
  store.context_dim = r.u32();
  store.layer_count = r.u32();
  const std::uint32_t doc_count = r.u32();
  store.docs.reserve(doc_count);
  for (std::uint32_t d = 0; d < doc_count; ++d) {
    PrecomputedDoc doc;
    doc.doc_id = r.bytes(r.u32());
    const std::uint32_t k_len = r.u32();
    doc.layers.reserve(store.layer_count);
    for (std::size_t l = 0; l < store.layer_count; ++l) {
      Matrix m(k_len, store.context_dim);
      const std::string raw = r.bytes(std::size_t{4} * k_len * store.context_dim);
      for (std::size_t i = 0; i < m.size(); ++i) {
        float f;
        std::memcpy(&f, raw.data() + 4 * i, 4);
        m.data[i] = static_cast<double>(f);
      }
      doc.layers.push_back(std::move(m));
    }
    store.by_id.emplace(doc.doc_id, store.docs.size());
    store.docs.push_back(std::move(doc));
  }
  if (r.pos != buf.size()) {
    throw IoError(path + ": trailing bytes after the declared documents");
  }
  return store;
}

std::vector<EncodedSequence> load_precomputed_contextual(
    const PrecomputedStore& store, const std::string& doc_id,
    std::size_t layers_requested, std::size_t label_dim) {
  auto it = store.by_id.find(doc_id);
  if (it == store.by_id.end()) {
    throw DataError("precomputed store has no document '" + doc_id + "' (" +
                    std::to_string(store.docs.size()) + " documents available)");
  }
  if (layers_requested > store.layer_count) {
    throw UsageError("requested " + std::to_string(layers_requested) +
                     " encoder layers, file provides " +
                     std::to_string(store.layer_count));
  }
  if (store.context_dim != label_dim) {
    throw ConfigError(
        "stored contextual dimension " + std::to_string(store.context_dim) +
        " differs from the configured label embedding dimension " +
        std::to_string(label_dim) +
        "; cosine scoring requires the two dimensions to be equal");
  }
  const PrecomputedDoc& doc = store.docs[it->second];
  std::vector<EncodedSequence> out;
  out.reserve(layers_requested);
  // The last `layers_requested` stored layers, preserving file order.
  for (std::size_t l = store.layer_count - layers_requested; l < store.layer_count; ++l) {
    EncodedSequence seq;
    seq.contextual = doc.layers[l];
    seq.mask.assign(doc.layers[l].rows, 1);
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace lguided
