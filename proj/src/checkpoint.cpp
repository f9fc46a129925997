// Copyright (c) 2026 the hvp authors
// SPDX-License-Identifier: Apache-2.0

#include "hvp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hvp/error.hpp"

namespace hvp {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'H', 'V', 'P', 'C', 'K', 'P', 'T', '1'};

void write_u32le(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32le(std::ostream& os, const float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), n * sizeof(float));
  } else {
    for (size_t i = 0; i < n; ++i) {
      uint32_t u;
      std::memcpy(&u, &data[i], 4);
      write_u32le(os, u);
    }
  }
}

void read_f32le(std::istream& is, float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), n * sizeof(float));
  } else {
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = read_u32le(is);
      std::memcpy(&data[i], &u, 4);
    }
  }
}

struct TensorEntry {
  std::string name;
  Shape shape;
  uint64_t offset;  // floats from blob start
  uint64_t count;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& model,
                     const std::vector<std::vector<float>>& main_velocity,
                     const std::vector<std::vector<float>>& pred_velocity,
                     const CheckpointMeta& meta) {
  auto named = model.named_params();
  // momentum buffers follow their parameters, prefixed
  std::vector<std::pair<std::string, const std::vector<float>*>> blobs;
  std::vector<TensorEntry> entries;
  uint64_t offset = 0;

  auto add = [&](const std::string& name, const Shape& shape,
                 const std::vector<float>* data) {
    entries.push_back({name, shape, offset, data->size()});
    blobs.emplace_back(name, data);
    offset += data->size();
  };

  for (auto& [name, t] : named) add(name, t.shape(), &t.vec());

  const auto main_params = model.encoder_projector_params();
  const auto pred_params = model.predictor_params();
  HVP_CHECK(main_velocity.size() == main_params.size() &&
                pred_velocity.size() == pred_params.size(),
            "save_checkpoint: velocity count mismatch");
  for (size_t i = 0; i < main_velocity.size(); ++i)
    add("momentum.main." + std::to_string(i),
        {static_cast<int64_t>(main_velocity[i].size())}, &main_velocity[i]);
  for (size_t i = 0; i < pred_velocity.size(); ++i)
    add("momentum.pred." + std::to_string(i),
        {static_cast<int64_t>(pred_velocity[i].size())}, &pred_velocity[i]);

  json header;
  header["version"] = 1;
  header["seed"] = meta.seed;
  header["step"] = meta.step;
  header["epoch"] = meta.epoch;
  header["config_hash"] = meta.config_hash;
  header["d_z"] = meta.widths.d_z;
  header["d_pred"] = meta.widths.d_pred;
  header["counters"] = {
      {"selection_forward_count", meta.counters.selection_forward_count},
      {"training_forward_count", meta.counters.training_forward_count},
      {"optimizer_steps", meta.counters.optimizer_steps},
      {"wall_seconds", meta.counters.wall_seconds}};
  json tens = json::array();
  for (const TensorEntry& e : entries) {
    json t;
    t["name"] = e.name;
    t["shape"] = e.shape;
    t["offset"] = e.offset;
    t["count"] = e.count;
    tens.push_back(t);
  }
  header["tensors"] = tens;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write checkpoint: " + path);
  f.write(kMagic, 8);
  write_u32le(f, static_cast<uint32_t>(hs.size()));
  f.write(hs.data(), hs.size());
  for (auto& [name, data] : blobs) write_f32le(f, data->data(), data->size());
  if (!f) throw FormatError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  const uint32_t hlen = read_u32le(f);
  std::string hs(hlen, '\0');
  f.read(hs.data(), hlen);
  if (!f) throw FormatError("truncated checkpoint header in " + path);
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw FormatError("unparseable checkpoint header: " + std::string(e.what()));
  }

  Checkpoint ck;
  try {
    ck.meta.seed = header.at("seed").get<uint64_t>();
    ck.meta.step = header.at("step").get<int64_t>();
    ck.meta.epoch = header.at("epoch").get<int>();
    ck.meta.config_hash = header.at("config_hash").get<uint64_t>();
    ck.meta.widths.d_z = header.at("d_z").get<int>();
    ck.meta.widths.d_pred = header.at("d_pred").get<int>();
    const json& c = header.at("counters");
    ck.meta.counters.selection_forward_count =
        c.at("selection_forward_count").get<uint64_t>();
    ck.meta.counters.training_forward_count =
        c.at("training_forward_count").get<uint64_t>();
    ck.meta.counters.optimizer_steps = c.at("optimizer_steps").get<uint64_t>();
    ck.meta.counters.wall_seconds = c.at("wall_seconds").get<double>();
  } catch (const json::exception& e) {
    throw FormatError("checkpoint header missing fields: " +
                      std::string(e.what()));
  }

  std::vector<TensorEntry> entries;
  for (const json& t : header.at("tensors"))
    entries.push_back({t.at("name").get<std::string>(),
                       t.at("shape").get<Shape>(),
                       t.at("offset").get<uint64_t>(),
                       t.at("count").get<uint64_t>()});

  // blobs are stored in entry order with contiguous offsets
  uint64_t expect = 0;
  for (const TensorEntry& e : entries) {
    if (e.offset != expect)
      throw FormatError("non-contiguous tensor offsets in " + path);
    expect += e.count;
  }

  std::vector<std::pair<TensorEntry, std::vector<float>>> loaded;
  for (const TensorEntry& e : entries) {
    std::vector<float> data(e.count);
    read_f32le(f, data.data(), e.count);
    if (!f) throw FormatError("truncated checkpoint blob in " + path);
    loaded.emplace_back(e, std::move(data));
  }

  auto take = [&](const std::string& name) -> Tensor {
    for (auto& [e, data] : loaded)
      if (e.name == name) {
        int64_t n = 1;
        for (int64_t d : e.shape) n *= d;
        if (static_cast<uint64_t>(n) != e.count)
          throw FormatError("tensor size mismatch for " + name);
        return Tensor::from_data(e.shape, std::move(data),
                                 /*requires_grad=*/true);
      }
    throw FormatError("checkpoint missing tensor " + name);
  };

  ModelState& m = ck.model;
  m.widths = ck.meta.widths;
  m.conv1_w = take("conv1.w");
  m.conv1_b = take("conv1.b");
  m.conv2_w = take("conv2.w");
  m.conv2_b = take("conv2.b");
  m.conv3_w = take("conv3.w");
  m.conv3_b = take("conv3.b");
  m.proj_w1 = take("proj.w1");
  m.proj_b1 = take("proj.b1");
  m.proj_w2 = take("proj.w2");
  m.proj_b2 = take("proj.b2");
  m.pred_w1 = take("pred.w1");
  m.pred_b1 = take("pred.b1");
  m.pred_w2 = take("pred.w2");
  m.pred_b2 = take("pred.b2");

  const size_t n_main = m.encoder_projector_params().size();
  const size_t n_pred = m.predictor_params().size();
  for (size_t i = 0; i < n_main; ++i)
    ck.main_velocity.push_back(
        take("momentum.main." + std::to_string(i)).vec());
  for (size_t i = 0; i < n_pred; ++i)
    ck.pred_velocity.push_back(
        take("momentum.pred." + std::to_string(i)).vec());
  return ck;
}

ModelState load_model(const std::string& path) {
  return load_checkpoint(path).model;
}

}  // namespace hvp
