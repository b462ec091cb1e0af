#include "lguided/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lguided/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace lguided {

namespace {

using nlohmann::json;

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
    if (pos + n > buf.size()) throw IoError(path + ": truncated checkpoint");
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

const char* contextual_name(ContextualKind k) {
  return k == ContextualKind::kPrecomputed ? "precomputed" : "bilstm";
}

ContextualKind contextual_from(const std::string& s) {
  if (s == "bilstm") return ContextualKind::kBiLstm;
  if (s == "precomputed") return ContextualKind::kPrecomputed;
  throw IoError("checkpoint: unknown contextual encoder '" + s + "'");
}

const char* pool_name(PoolMode p) {
  switch (p) {
    case PoolMode::kMax: return "max";
    case PoolMode::kLast: return "last";
    default: return "mean";
  }
}

PoolMode pool_from(const std::string& s) {
  if (s == "mean") return PoolMode::kMean;
  if (s == "max") return PoolMode::kMax;
  if (s == "last") return PoolMode::kLast;
  throw IoError("checkpoint: unknown pool mode '" + s + "'");
}

json hyperparams_to_json(const HyperParams& hp) {
  return json{{"batch_size", hp.batch_size},
              {"learning_rate", hp.learning_rate},
              {"epochs", hp.epochs},
              {"seed", std::to_string(hp.seed)},
              {"protos", hp.protos},
              {"embed_dim", hp.embed_dim},
              {"hidden", hp.hidden},
              {"label_dim", hp.label_dim},
              {"max_len", hp.max_len},
              {"min_count", hp.min_count},
              {"no_label_layer", hp.no_label_layer},
              {"freeze_embeddings", hp.freeze_embeddings},
              {"contextual", contextual_name(hp.contextual)},
              {"layer_count", hp.layer_count},
              {"pool", pool_name(hp.pool)},
              {"clip_norm", hp.clip_norm},
              {"workers", hp.workers},
              {"val_fraction", hp.val_fraction}};
}

HyperParams hyperparams_from_json(const json& j) {
  HyperParams hp;
  hp.batch_size = j.at("batch_size").get<std::size_t>();
  hp.learning_rate = j.at("learning_rate").get<double>();
  hp.epochs = j.at("epochs").get<std::size_t>();
  hp.seed = std::stoull(j.at("seed").get<std::string>());
  hp.protos = j.at("protos").get<std::size_t>();
  hp.embed_dim = j.at("embed_dim").get<std::size_t>();
  hp.hidden = j.at("hidden").get<std::size_t>();
  hp.label_dim = j.at("label_dim").get<std::size_t>();
  hp.max_len = j.at("max_len").get<std::size_t>();
  hp.min_count = j.at("min_count").get<std::size_t>();
  hp.no_label_layer = j.at("no_label_layer").get<bool>();
  hp.freeze_embeddings = j.at("freeze_embeddings").get<bool>();
  hp.contextual = contextual_from(j.at("contextual").get<std::string>());
  hp.layer_count = j.at("layer_count").get<std::size_t>();
  hp.pool = pool_from(j.at("pool").get<std::string>());
  hp.clip_norm = j.at("clip_norm").get<double>();
  hp.workers = j.at("workers").get<std::size_t>();
  hp.val_fraction = j.at("val_fraction").get<double>();
  return hp;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write on: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path);
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::string buf;
  buf.append(kCheckpointMagic, 4);
  put_u32(buf, kCheckpointVersion);

  json meta{{"hyperparams", hyperparams_to_json(model.hp)},
            {"labels", model.labels},
            {"vocab", model.vocab.index_to_token}};
  const std::string meta_str = meta.dump();
  put_u32(buf, static_cast<std::uint32_t>(meta_str.size()));
  buf.append(meta_str);

  const auto tensors = named_tensors(model);
  put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<std::uint32_t>(tensor->rows));
    put_u32(buf, static_cast<std::uint32_t>(tensor->cols));
    const std::size_t nbytes = tensor->size() * sizeof(double);
    const std::size_t off = buf.size();
    buf.resize(off + nbytes);
    std::memcpy(buf.data() + off, tensor->data.data(), nbytes);
  }
  write_file_atomic(path, buf);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r{buf, 0, path};

  if (r.bytes(4) != std::string(kCheckpointMagic, 4)) {
    throw IoError(path + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version) + ", expected " +
                  std::to_string(kCheckpointVersion));
  }

  json meta;
  try {
    meta = json::parse(r.bytes(r.u32()));
  } catch (const json::exception& e) {
    throw IoError(path + ": corrupt metadata block: " + e.what());
  }

  HyperParams hp;
  Vocabulary vocab;
  std::vector<std::string> labels;
  try {
    hp = hyperparams_from_json(meta.at("hyperparams"));
    labels = meta.at("labels").get<std::vector<std::string>>();
    const auto tokens = meta.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < 2 || tokens[0] != Vocabulary::kPadToken ||
        tokens[1] != Vocabulary::kUnkToken) {
      throw IoError(path + ": vocabulary block missing reserved entries");
    }
    vocab.index_to_token.clear();
    vocab.token_to_index.clear();
    for (const auto& tok : tokens) {
      vocab.token_to_index.emplace(tok, vocab.index_to_token.size());
      vocab.index_to_token.push_back(tok);
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": corrupt metadata block: " + e.what());
  }

  // Zero-initialized skeleton with the right shapes, then fill from blocks.
  SeededRng dummy(0);
  Model model = build_model(hp, vocab, labels, dummy);

  auto tensors = named_tensors_mutable(model);
  const std::uint32_t count = r.u32();
  if (count != tensors.size()) {
    throw IoError(path + ": checkpoint holds " + std::to_string(count) +
                  " tensors, model needs " + std::to_string(tensors.size()));
  }
  for (auto& [name, tensor] : tensors) {
    const std::string stored_name = r.bytes(r.u32());
    if (stored_name != name) {
      throw IoError(path + ": tensor '" + stored_name + "' where '" + name +
                    "' was expected");
    }
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != tensor->rows || cols != tensor->cols) {
      throw IoError(path + ": tensor '" + name + "' has shape " +
                    std::to_string(rows) + "x" + std::to_string(cols) +
                    ", expected " + shape_str(*tensor));
    }
    const std::string raw = r.bytes(tensor->size() * sizeof(double));
    std::memcpy(tensor->data.data(), raw.data(), raw.size());
  }
  if (r.pos != buf.size()) {
    throw IoError(path + ": trailing bytes after the declared tensors");
  }
  return model;
}

}  // namespace lguided
