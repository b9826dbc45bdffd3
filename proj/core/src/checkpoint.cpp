#include "splicernn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "splicernn/config.hpp"

namespace splicernn {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'N', 'N', 'C', 'K', 'P', 'T'};

constexpr std::uint8_t kSectionConfig = 1;
constexpr std::uint8_t kSectionTensors = 2;
constexpr std::uint8_t kSectionOptimizer = 3;

constexpr std::uint8_t kOptNone = 0;
constexpr std::uint8_t kOptAdam = 1;
constexpr std::uint8_t kOptRmsprop = 2;
constexpr std::uint8_t kOptSgd = 3;

std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(buf, bits);
}

void put_string(std::string& buf, const std::string& s) {
  put_u32(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

void put_matrix(std::string& buf, const Matrix& m) {
  put_u64(buf, m.rows);
  put_u64(buf, m.cols);
  for (const double v : m.data) put_f64(buf, v);
}

struct Cursor {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::uint64_t n) const {
    if (pos > bytes.size() || n > bytes.size() - pos)
      throw CheckpointError(CheckpointErrorKind::truncated, "checkpoint: truncated file");
  }
  std::uint8_t take_u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes[pos++]);
  }
  std::uint32_t take_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t take_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double take_f64() {
    const std::uint64_t bits = take_u64();
    double d = 0.0;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string take_string() {
    const std::uint32_t n = take_u32();
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
  Matrix take_matrix() {
    const std::uint64_t rows = take_u64();
    const std::uint64_t cols = take_u64();
    if (rows > (1u << 24) || cols > (1u << 24))
      throw CheckpointError(CheckpointErrorKind::format, "checkpoint: implausible tensor shape");
    Matrix m(rows, cols);
    for (double& v : m.data) v = take_f64();
    return m;
  }
};

void begin_section(std::string& buf, std::uint8_t tag, std::size_t& len_at) {
  put_u8(buf, tag);
  len_at = buf.size();
  put_u64(buf, 0);  // patched by end_section
}

void end_section(std::string& buf, std::size_t len_at) {
  const std::uint64_t len = buf.size() - (len_at + 8);
  for (int i = 0; i < 8; ++i) buf[len_at + i] = static_cast<char>((len >> (8 * i)) & 0xff);
}

}  // namespace

std::string encode_checkpoint(SpliceModel& model, const Optimizer* optimizer) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kCheckpointVersion);

  std::size_t len_at = 0;
  begin_section(buf, kSectionConfig, len_at);
  put_string(buf, model_config_to_text(model.config));
  end_section(buf, len_at);

  begin_section(buf, kSectionTensors, len_at);
  const std::vector<NamedTensor> tensors = model.state_tensors();
  put_u64(buf, tensors.size());
  for (const NamedTensor& nt : tensors) {
    put_string(buf, nt.name);
    put_matrix(buf, nt.tensor->value);
  }
  end_section(buf, len_at);

  begin_section(buf, kSectionOptimizer, len_at);
  if (!optimizer) {
    put_u8(buf, kOptNone);
  } else {
    switch (optimizer->config().kind) {
      case OptimizerKind::adam: {
        const AdamState* s = optimizer->adam();
        put_u8(buf, kOptAdam);
        put_f64(buf, s->alpha);
        put_f64(buf, s->beta1);
        put_f64(buf, s->beta2);
        put_f64(buf, s->epsilon);
        put_u64(buf, s->t);
        put_u64(buf, s->m.size());
        for (std::size_t i = 0; i < s->m.size(); ++i) {
          put_matrix(buf, s->m[i]);
          put_matrix(buf, s->v[i]);
        }
        break;
      }
      case OptimizerKind::rmsprop: {
        const RmspropState* s = optimizer->rmsprop();
        put_u8(buf, kOptRmsprop);
        put_f64(buf, s->alpha);
        put_f64(buf, s->rho);
        put_f64(buf, s->epsilon);
        put_u64(buf, s->sq.size());
        for (const Matrix& m : s->sq) put_matrix(buf, m);
        break;
      }
      case OptimizerKind::sgd:
        put_u8(buf, kOptSgd);
        put_f64(buf, optimizer->config().alpha);
        break;
    }
  }
  end_section(buf, len_at);

  put_u64(buf, fnv1a64(buf.data(), buf.size()));
  return buf;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8)
    throw CheckpointError(CheckpointErrorKind::truncated, "checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(CheckpointErrorKind::format, "checkpoint: bad magic bytes");

  // verify the trailing checksum before trusting any content
  const std::size_t body_len = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i)
    stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[body_len + i]))
              << (8 * i);
  if (fnv1a64(bytes.data(), body_len) != stored)
    throw CheckpointError(CheckpointErrorKind::checksum, "checkpoint: checksum mismatch");

  Cursor cur{bytes};
  cur.pos = sizeof(kMagic);
  const std::uint32_t version = cur.take_u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointErrorKind::version,
                          "checkpoint: unsupported format version " + std::to_string(version) +
                              " (this build reads version " +
                              std::to_string(kCheckpointVersion) + ")");

  std::optional<ModelConfig> config;
  Checkpoint out;
  bool have_tensors = false;
  std::uint8_t opt_kind = kOptNone;
  std::string opt_payload;

  while (cur.pos < body_len) {
    const std::uint8_t tag = cur.take_u8();
    const std::uint64_t len = cur.take_u64();
    cur.need(len);
    const std::size_t section_end = cur.pos + len;

    switch (tag) {
      case kSectionConfig: {
        const std::string text = cur.take_string();
        try {
          config = model_config_from_text(text);
        } catch (const ValidationError& e) {
          throw CheckpointError(CheckpointErrorKind::format,
                                std::string("checkpoint: bad config section: ") + e.what());
        }
        break;
      }
      case kSectionTensors: {
        if (!config)
          throw CheckpointError(CheckpointErrorKind::format,
                                "checkpoint: tensor section precedes config section");
        out.model = SpliceModel::create(*config);
        const std::vector<NamedTensor> tensors = out.model.state_tensors();
        const std::uint64_t count = cur.take_u64();
        if (count != tensors.size())
          throw CheckpointError(CheckpointErrorKind::format,
                                "checkpoint: expected " + std::to_string(tensors.size()) +
                                    " tensors, found " + std::to_string(count));
        for (const NamedTensor& nt : tensors) {
          const std::string name = cur.take_string();
          if (name != nt.name)
            throw CheckpointError(CheckpointErrorKind::format,
                                  "checkpoint: unexpected tensor '" + name + "' (wanted '" +
                                      nt.name + "')");
          Matrix m = cur.take_matrix();
          if (!m.same_shape(nt.tensor->value))
            throw CheckpointError(CheckpointErrorKind::format,
                                  "checkpoint: tensor '" + name + "' has the wrong shape");
          nt.tensor->value = std::move(m);
          nt.tensor->zero_grad();
        }
        have_tensors = true;
        break;
      }
      case kSectionOptimizer: {
        opt_kind = cur.take_u8();
        opt_payload = bytes.substr(cur.pos, section_end - cur.pos);
        cur.pos = section_end;
        break;
      }
      default:
        throw CheckpointError(CheckpointErrorKind::format,
                              "checkpoint: unknown section tag " + std::to_string(tag));
    }
    if (cur.pos != section_end)
      throw CheckpointError(CheckpointErrorKind::format, "checkpoint: section length mismatch");
  }

  if (!config || !have_tensors)
    throw CheckpointError(CheckpointErrorKind::format, "checkpoint: missing required sections");

  if (opt_kind != kOptNone) {
    const std::vector<NamedTensor> named = out.model.trainable_parameters();
    std::vector<Tensor*> params;
    for (const NamedTensor& nt : named) params.push_back(nt.tensor);

    Cursor oc{opt_payload};
    OptimizerConfig ocfg;
    switch (opt_kind) {
      case kOptAdam: {
        ocfg.kind = OptimizerKind::adam;
        ocfg.alpha = oc.take_f64();
        ocfg.beta1 = oc.take_f64();
        ocfg.beta2 = oc.take_f64();
        ocfg.epsilon = oc.take_f64();
        const std::uint64_t t = oc.take_u64();
        const std::uint64_t count = oc.take_u64();
        if (count != params.size())
          throw CheckpointError(CheckpointErrorKind::format,
                                "checkpoint: optimizer tracks the wrong parameter count");
        Optimizer opt(ocfg, params);
        AdamState* s = opt.adam();
        s->t = t;
        for (std::size_t i = 0; i < count; ++i) {
          s->m[i] = oc.take_matrix();
          s->v[i] = oc.take_matrix();
          if (!s->m[i].same_shape(params[i]->value) || !s->v[i].same_shape(params[i]->value))
            throw CheckpointError(CheckpointErrorKind::format,
                                  "checkpoint: optimizer moment shape mismatch");
        }
        out.optimizer = std::move(opt);
        break;
      }
      case kOptRmsprop: {
        ocfg.kind = OptimizerKind::rmsprop;
        ocfg.alpha = oc.take_f64();
        ocfg.rho = oc.take_f64();
        ocfg.epsilon = oc.take_f64();
        const std::uint64_t count = oc.take_u64();
        if (count != params.size())
          throw CheckpointError(CheckpointErrorKind::format,
                                "checkpoint: optimizer tracks the wrong parameter count");
        Optimizer opt(ocfg, params);
        RmspropState* s = opt.rmsprop();
        for (std::size_t i = 0; i < count; ++i) {
          s->sq[i] = oc.take_matrix();
          if (!s->sq[i].same_shape(params[i]->value))
            throw CheckpointError(CheckpointErrorKind::format,
                                  "checkpoint: optimizer moment shape mismatch");
        }
        out.optimizer = std::move(opt);
        break;
      }
      case kOptSgd: {
        ocfg.kind = OptimizerKind::sgd;
        ocfg.alpha = oc.take_f64();
        out.optimizer = Optimizer(ocfg, params);
        break;
      }
      default:
        throw CheckpointError(CheckpointErrorKind::format,
                              "checkpoint: unknown optimizer kind " + std::to_string(opt_kind));
    }
    if (oc.pos != opt_payload.size())
      throw CheckpointError(CheckpointErrorKind::format,
                            "checkpoint: optimizer section length mismatch");
  }

  return out;
}

void save_checkpoint(SpliceModel& model, const Optimizer* optimizer, const std::string& path) {
  const std::string bytes = encode_checkpoint(model, optimizer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed while writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path + ": " + e.what());
  }
}

}  // namespace splicernn
