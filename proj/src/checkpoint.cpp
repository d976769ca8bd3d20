#include "evdiff/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evdiff/errors.hpp"
#include "evdiff/tensor_io.hpp"
#include "evdiff/version.hpp"

namespace evdiff {

namespace {

constexpr const char* kManifestVersion = "evdiff-checkpoint-1";

std::string param_filename(const std::string& name) {
    std::string f = name;
    for (char& c : f)
        if (c == '.' || c == '/') c = '_';
    return f + ".ten";
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParamStore& store, const CheckpointMeta& meta) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["format"] = kManifestVersion;
    j["toolkit_version"] = kVersion;
    j["rng_algorithm"] = kRngAlgorithm;
    j["codec"] = codec_mode_name(meta.codec);
    j["schedule"] = {{"steps", meta.schedule_steps}, {"beta_start", meta.beta_start}, {"beta_end", meta.beta_end}};
    j["image_size"] = meta.image_size;
    j["tpr"] = {{"levels", meta.tpr_levels}, {"bins", meta.tpr_bins}};
    const DenoiserConfig& d = meta.denoiser;
    j["denoiser"] = {{"latent_ch", d.latent_ch}, {"c1", d.c1},       {"c2", d.c2},
                     {"c3", d.c3},               {"cb", d.cb},       {"temb_dim", d.temb_dim},
                     {"attn_dim", d.attn_dim},   {"events", d.events}, {"event_feature_ch", d.event_feature_ch},
                     {"decoder_attention", d.decoder_attention}};
    const EventEncoderConfig& e = meta.encoder;
    j["event_encoder"] = {{"in_ch", e.in_ch}, {"hidden1", e.hidden1}, {"hidden2", e.hidden2}, {"out_ch", e.out_ch}};

    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Param& p = store[i];
        const std::string file = param_filename(p.name);
        save_tensor(p.value, (std::filesystem::path(dir) / file).string());
        params.push_back({{"name", p.name}, {"file", file}, {"dims", p.value.dims()}});
    }
    j["params"] = std::move(params);

    std::ofstream f(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint manifest in " + dir);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("checkpoint manifest write failed in " + dir);
}

std::pair<ParamStore, CheckpointMeta> load_checkpoint(const std::string& dir) {
    const std::string mpath = (std::filesystem::path(dir) / "manifest.json").string();
    std::ifstream f(mpath);
    if (!f) throw IoError("cannot open checkpoint manifest: " + mpath);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(mpath, 0, std::string("manifest parse failure: ") + e.what());
    }
    if (j.value("format", "") != kManifestVersion)
        throw FormatError(mpath, 0, "unsupported checkpoint format: " + j.value("format", "<missing>"));

    CheckpointMeta meta;
    meta.toolkit_version = j.value("toolkit_version", "");
    meta.rng_algorithm = j.value("rng_algorithm", "");
    meta.codec = codec_mode_from_string(j.value("codec", "avgpool2"));
    meta.schedule_steps = j["schedule"]["steps"].get<int>();
    meta.beta_start = j["schedule"]["beta_start"].get<double>();
    meta.beta_end = j["schedule"]["beta_end"].get<double>();
    meta.image_size = j.value("image_size", 32);
    meta.tpr_levels = j["tpr"]["levels"].get<int>();
    meta.tpr_bins = j["tpr"]["bins"].get<int>();
    const auto& d = j["denoiser"];
    meta.denoiser.latent_ch = d["latent_ch"].get<int>();
    meta.denoiser.c1 = d["c1"].get<int>();
    meta.denoiser.c2 = d["c2"].get<int>();
    meta.denoiser.c3 = d["c3"].get<int>();
    meta.denoiser.cb = d["cb"].get<int>();
    meta.denoiser.temb_dim = d["temb_dim"].get<int>();
    meta.denoiser.attn_dim = d["attn_dim"].get<int>();
    meta.denoiser.events = d["events"].get<bool>();
    meta.denoiser.event_feature_ch = d["event_feature_ch"].get<int>();
    meta.denoiser.decoder_attention = d["decoder_attention"].get<bool>();
    const auto& e = j["event_encoder"];
    meta.encoder.in_ch = e["in_ch"].get<int>();
    meta.encoder.hidden1 = e["hidden1"].get<int>();
    meta.encoder.hidden2 = e["hidden2"].get<int>();
    meta.encoder.out_ch = e["out_ch"].get<int>();

    ParamStore store;
    for (const auto& p : j["params"]) {
        const std::string name = p["name"].get<std::string>();
        const std::string file = p["file"].get<std::string>();
        Tensor t = load_tensor((std::filesystem::path(dir) / file).string());
        const std::vector<int> dims = p["dims"].get<std::vector<int>>();
        if (t.dims() != dims)
            throw FormatError(mpath, 0, "parameter " + name + " dims " + dims_to_string(t.dims()) +
                                            " disagree with manifest " + dims_to_string(dims));
        store.add(name, std::move(t));
    }
    return {std::move(store), std::move(meta)};
}

}  // namespace evdiff
