#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "regionfeat/attention.hpp"
#include "regionfeat/tensor.hpp"

namespace regionfeat {

// Parameter checkpoint: a directory holding one tensor file per learnable
// tensor plus a JSON manifest with the dimensions.
//   v_box.rft     [C_E, 4*C_E]
//   w_box_hat.rft [K, C_g, C_E]
//   w_im.rft      [C_g, 2*C_E]
//   w_app.rft     [K, C_f]
//   manifest.json {"K":., "C_E":., "C_g":., "C_f":.}

namespace detail {

inline NdArray to_array(const std::vector<double>& data, std::vector<std::uint32_t> dims) {
    NdArray a;
    a.dims = std::move(dims);
    a.data = data;
    return a;
}

inline std::vector<double> from_array(const NdArray& a, std::vector<std::uint32_t> want,
                                      const char* name) {
    if (a.dims != want) {
        throw std::invalid_argument(std::string("checkpoint tensor ") + name +
                                    " has unexpected dims");
    }
    return a.data;
}

}  // namespace detail

inline void save_checkpoint(const std::string& dir, const AttentionParams& params) {
    validate_attention_params(params);
    std::filesystem::create_directories(dir);
    const auto u32 = [](int v) { return static_cast<std::uint32_t>(v); };
    const std::filesystem::path root(dir);
    write_tensor((root / "v_box.rft").string(),
                 detail::to_array(params.v_box, {u32(params.embed_dim), u32(4 * params.embed_dim)}));
    write_tensor((root / "w_box_hat.rft").string(),
                 detail::to_array(params.w_box_hat,
                                  {u32(params.parts), u32(params.geo_dim), u32(params.embed_dim)}));
    write_tensor((root / "w_im.rft").string(),
                 detail::to_array(params.w_im, {u32(params.geo_dim), u32(2 * params.embed_dim)}));
    write_tensor((root / "w_app.rft").string(),
                 detail::to_array(params.w_app, {u32(params.parts), u32(params.feat_dim)}));

    nlohmann::json manifest;
    manifest["K"] = params.parts;
    manifest["C_E"] = params.embed_dim;
    manifest["C_g"] = params.geo_dim;
    manifest["C_f"] = params.feat_dim;
    std::ofstream out(root / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint manifest for writing");
    out << manifest.dump(2) << "\n";
    if (!out.good()) throw std::runtime_error("failed writing checkpoint manifest");
}

inline AttentionParams load_checkpoint(const std::string& dir) {
    const std::filesystem::path root(dir);
    std::ifstream in(root / "manifest.json", std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint manifest: " +
                                 (root / "manifest.json").string());
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed checkpoint manifest: ") + e.what());
    }
    for (const char* key : {"K", "C_E", "C_g", "C_f"}) {
        if (!manifest.contains(key) || !manifest[key].is_number_integer()) {
            throw std::runtime_error(std::string("checkpoint manifest missing integer ") + key);
        }
    }
    AttentionParams params = make_attention_params(
        manifest["K"].get<int>(), manifest["C_E"].get<int>(), manifest["C_g"].get<int>(),
        manifest["C_f"].get<int>());
    const auto u32 = [](int v) { return static_cast<std::uint32_t>(v); };
    params.v_box = detail::from_array(read_tensor((root / "v_box.rft").string()),
                                      {u32(params.embed_dim), u32(4 * params.embed_dim)}, "v_box");
    params.w_box_hat = detail::from_array(
        read_tensor((root / "w_box_hat.rft").string()),
        {u32(params.parts), u32(params.geo_dim), u32(params.embed_dim)}, "w_box_hat");
    params.w_im = detail::from_array(read_tensor((root / "w_im.rft").string()),
                                     {u32(params.geo_dim), u32(2 * params.embed_dim)}, "w_im");
    params.w_app = detail::from_array(read_tensor((root / "w_app.rft").string()),
                                      {u32(params.parts), u32(params.feat_dim)}, "w_app");
    validate_attention_params(params);
    return params;
}

}  // namespace regionfeat
