// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "procam/config.hpp"

using namespace procam;

TEST_CASE("defaults survive a serialize/parse round trip") {
    RunConfig def;
    std::string text = serialize_run_config(def);
    RunConfig back = parse_run_config(text);
    CHECK(serialize_run_config(back) == text);
    CHECK(back.scene_name == def.scene_name);
    CHECK(back.weights.w_tr == def.weights.w_tr);
    CHECK(back.sched.geo_res == def.sched.geo_res);
    CHECK(back.sched.geo_at == def.sched.geo_at);
    CHECK(back.seed == def.seed);
}

TEST_CASE("values, comments, and whitespace parse") {
    RunConfig c = parse_run_config(R"(# run
[scene]
name = "shiny-patch"   # fixture
views = 24
protocol = "cycled"

[loss]
w_tr = 0.25

[schedule]
geo_res = [8, 16, 32]
geo_at = [0.0, 0.3, 0.6]
stratified = false

[projector_init]
rot_deg = 5.5
optimize_colight = false

[io]
seed = 99
)");
    CHECK(c.scene_name == "shiny-patch");
    CHECK(c.views == 24);
    CHECK(c.protocol == "cycled");
    CHECK(c.weights.w_tr == 0.25);
    CHECK(c.sched.geo_res == std::vector<int>{8, 16, 32});
    REQUIRE(c.sched.geo_at.size() == 3);
    CHECK(c.sched.geo_at[1] == 0.3);
    CHECK(c.stratified == false);
    CHECK(c.init_rot_deg == 5.5);
    CHECK(c.optimize_colight == false);
    CHECK(c.seed == 99);
    // untouched keys keep their defaults
    CHECK(c.weights.w_img == 1.0);
    CHECK(c.sched.batch_rays == 512);
}

TEST_CASE("unknown sections, keys, and malformed values are rejected") {
    CHECK_THROWS_AS(parse_run_config("[nope]\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[scene]\nfoo = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[loss]\nw_img = banana\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[scene]\nviews = 1.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[scene]\nname = slab\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("views = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[scene]\nprotocol = \"solo\"\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[schedule]\ngeo_res = [8]\ngeo_at = [0.0, 0.5]\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_run_config("[io]\nstratified = true\n"), std::invalid_argument);
}

TEST_CASE("the committed example config is exactly the defaults") {
    RunConfig file = load_run_config(std::string(PROCAM_SOURCE_DIR) + "/configs/default.toml");
    CHECK(serialize_run_config(file) == serialize_run_config(RunConfig{}));
}

TEST_CASE("to_train_config carries the schedule, weights, and flags over") {
    RunConfig c;
    c.learned_transmittance = false;
    c.stratified = false;
    c.n_primary = 17;
    c.seed = 5;
    c.optimize_intrinsics = false;
    TrainConfig t = to_train_config(c);
    CHECK(t.render.tr_mode == TrMode::kMarched);
    CHECK(t.render.stratified == false);
    CHECK(t.render.n_primary == 17);
    CHECK(t.seed == 5);
    CHECK(t.optimize_projector_intrinsics == false);
    CHECK(t.sched.scene_steps == c.sched.scene_steps);
    CHECK(t.weights.w_fog == c.weights.w_fog);
}
