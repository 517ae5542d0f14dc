#include "gscat/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace gscat;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("gscat_cfg_" + name); }

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST(Config, JsonRoundTrip) {
    ExperimentConfig c = default_config();
    c.depth = 1;
    c.seed = 99;
    c.scatter.prune_threshold = 1e-3;
    c.tones[0].tone.envelopes.push_back(c.tones[0].tone.envelopes[0]);
    c.tones[0].tone.n_harmonics = 2;
    c.omega[1].window = WindowKind::hann;
    EXPECT_EQ(config_from_json(to_json(c)), c);
    const fs::path p = temp_file("roundtrip.json");
    save_config(p, c);
    EXPECT_EQ(load_config(p), c);
    fs::remove(p);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
    EXPECT_EQ(load_config(GSCAT_DEFAULT_CONFIG), default_config());
}

TEST(Config, MissingKeysTakeDefaults) {
    const ExperimentConfig c = config_from_json(nlohmann::json::parse(R"({"version": 1})"));
    EXPECT_EQ(c.omega, default_omega());
    EXPECT_TRUE(c.tones.empty());
    EXPECT_EQ(c.depth, 2u);
    EXPECT_TRUE(c.normalize);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsUnknownKeysAndVersions) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"version": 1, "colour": 3})")), invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"version": 2})")), invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({})")), invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"version": 1, "verify": {"prop2": true}})")),
                 invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"version": 1, "depth": -1})")), invalid_argument);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"version": 1, "depth": "two"})")), invalid_argument);
    try {
        config_from_json(nlohmann::json::parse(R"({"version": 1, "tones": [{"pitch": 3}]})"));
        FAIL();
    } catch (const invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("pitch"), std::string::npos);
    }
}

TEST(Config, OverridesReplaceExistingKeys) {
    nlohmann::json j = to_json(default_config());
    apply_override(j, "depth=1");
    apply_override(j, "tones.0.n_harmonics=3");
    apply_override(j, "omega.1.window=hann");
    apply_override(j, "output_dir=results/run");
    const ExperimentConfig c = config_from_json(j);
    EXPECT_EQ(c.depth, 1u);
    EXPECT_EQ(c.tones[0].tone.n_harmonics, 3u);
    EXPECT_EQ(c.omega[1].window, WindowKind::hann);
    EXPECT_EQ(c.output_dir, "results/run");

    EXPECT_THROW(apply_override(j, "nonsense=1"), invalid_argument);
    EXPECT_THROW(apply_override(j, "tones.9.xi0_hz=1"), invalid_argument);
    EXPECT_THROW(apply_override(j, "tones.x=1"), invalid_argument);
    EXPECT_THROW(apply_override(j, "depth.inner=1"), invalid_argument);
    EXPECT_THROW(apply_override(j, "depth"), invalid_argument);
    EXPECT_THROW(apply_override(j, "=3"), invalid_argument);
    EXPECT_THROW(apply_override(j, "a..b=3"), invalid_argument);
}

TEST(Config, ValidationCatchesStructuralErrors) {
    ExperimentConfig c = default_config();
    EXPECT_NO_THROW(validate(c));

    c.depth = 3;
    EXPECT_THROW(validate(c), invalid_argument);

    c = default_config();
    c.omega[0].atom_channel = c.omega[0].channels;
    EXPECT_THROW(validate(c), invalid_argument);

    c = default_config();
    c.omega[2].time_step = 0;
    EXPECT_THROW(validate(c), invalid_argument);

    c = default_config();
    c.tones[0].tone.n_harmonics = 40;
    try {
        validate(c);
        FAIL();
    } catch (const invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("Nyquist"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("32000"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("22050"), std::string::npos);
    }

    c = default_config();
    c.tones[0].deformation.amplitude = 1.0;
    EXPECT_THROW(validate(c), invalid_argument);

    c = default_config();
    c.verify.decay_exponent = 1.0;
    EXPECT_THROW(validate(c), invalid_argument);
}

TEST(Config, FileErrors) {
    try {
        load_config(temp_file("does_not_exist.json"));
        FAIL();
    } catch (const io_error& e) {
        EXPECT_EQ(e.path(), temp_file("does_not_exist.json").string());
    }
    const fs::path p = temp_file("broken.json");
    write_text(p, "{ \"version\": 1,");
    EXPECT_THROW(load_config(p), invalid_argument);
    fs::remove(p);
}

TEST(Config, MaterializedDeformationsFollowConfig) {
    const ExperimentConfig c = default_config();
    const Tone& t = c.tones[0].tone;
    const Deformation d = materialize(c.tones[0].deformation, t);
    EXPECT_EQ(d.kind, DeformationKind::frequency_mod);
    ASSERT_EQ(d.phase.size(), 1u);
    EXPECT_EQ(d.phase[0].size(), t.length());
    EXPECT_NEAR(sup_norm(d.phase[0]), 0.01, 1e-6);
    EXPECT_EQ(materialize(DeformationConfig{}, t).kind, DeformationKind::none);
}

TEST(Config, DefaultOmegaBuildsContractiveSequence) {
    const ExperimentConfig c = default_config();
    const TripletSequence omega = build_omega(c, c.tones[0].tone.length());
    EXPECT_EQ(omega.size(), 3u);
    EXPECT_TRUE(omega.is_contractive());
    EXPECT_EQ(omega.frame(0).frames(), 300u);
    EXPECT_EQ(omega.frame(1).frames(), 30u);
    EXPECT_EQ(omega.frame(2).frames(), 6u);
}
