#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "polerisk/catalog.hpp"
#include "polerisk/ply.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Result cli(const fs::path& dir, const std::string& args) {
    const fs::path out = dir / "stdout.txt";
    const std::string cmd = std::string("\"") + POLERISK_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            (dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("run subcommand end to end") {
    synth::TempDir tmp("polerisk_cli_run");
    const auto truth = synth::write_pole_fixture(tmp.path / "inputs", 3, 21, 4, 1200);
    const auto catalog = synth::records(truth);
    synth::write_text(tmp.path / "catalog.csv", polerisk::serialize_pole_catalog(catalog));
    synth::write_text(tmp.path / "risk.ini", synth::kFixtureConfig);

    const std::string common = "run --catalog " + q(tmp.path / "catalog.csv") + " --inputs " + q(tmp.path / "inputs") +
                               " --config " + q(tmp.path / "risk.ini");
    const auto r = cli(tmp.path, common + " --out-summary " + q(tmp.path / "summary.csv") + " --out-stages " +
                                     q(tmp.path / "stages.csv") + " --jobs 2");
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["features"].size() == 3);
    CHECK(slurp(tmp.path / "summary.csv").find("# poles_assessed,3\n") != std::string::npos);

    // the risk subcommand reproduces the GeoJSON from stage results
    const auto again = cli(tmp.path, "risk --assessments-in " + q(tmp.path / "stages.csv") + " --catalog " +
                                         q(tmp.path / "catalog.csv") + " --config " + q(tmp.path / "risk.ini") +
                                         " --out geojson");
    CHECK(again.code == 0);
    CHECK(again.out == r.out);

    const auto second = cli(tmp.path, common + " --out-geojson " + q(tmp.path / "b.geojson"));
    CHECK(second.code == 0);
    CHECK(slurp(tmp.path / "b.geojson") == r.out.substr(0, r.out.size() - 1));

    synth::write_text(tmp.path / "bad.ini", "[fire]\nthresh_low = 0.9\n");
    CHECK(cli(tmp.path, "run --catalog " + q(tmp.path / "catalog.csv") + " --inputs " + q(tmp.path / "inputs") +
                            " --config " + q(tmp.path / "bad.ini"))
              .code == 2);
    synth::write_text(tmp.path / "bad.csv", "nope\n");
    CHECK(cli(tmp.path, "run --catalog " + q(tmp.path / "bad.csv") + " --inputs " + q(tmp.path / "inputs") +
                            " --config " + q(tmp.path / "risk.ini"))
              .code == 2);
    CHECK(cli(tmp.path, "run --catalog").code != 0);
}

TEST_CASE("stage subcommands") {
    synth::TempDir tmp("polerisk_cli_stages");
    const auto truth = synth::write_pole_fixture(tmp.path, 1, 5, 3, 1500);
    const fs::path pole = tmp.path / truth[0].record.pole_id;

    // inclination needs the pole_id column
    std::string rois = "pole_id,image,heading,x_min,y_min,x_max,y_max\n";
    for (int v = 0; v < 3; ++v) {
        char name[16];
        std::snprintf(name, sizeof name, "h%03d.pgm", v * 36);
        rois += "P0," + std::string(name) + "," + std::to_string(v * 36) + ",270,120,350,580\n";
    }
    synth::write_text(tmp.path / "rois.csv", rois);
    const auto inc = cli(tmp.path, "inclination --edges " + q(pole / "edges") + " --rois " + q(tmp.path / "rois.csv"));
    CHECK(inc.code == 0);
    REQUIRE(inc.out.rfind("pole_id,inclination_deg,deflection_deg,n_views\nP0,", 0) == 0);
    const double got = std::stod(inc.out.substr(inc.out.find("P0,") + 3));
    CHECK(std::abs(got - truth[0].image_inclination_deg) <= 0.5);
    CHECK(cli(tmp.path, "inclination --edges " + q(pole / "edges") + " --rois " + q(pole / "rois.csv")).code == 1);

    const auto depth = cli(tmp.path, "depth --map " + q(pole / "depth" / "view0.pfm") +
                                         " --pole-box 10,0,20,48 --veg-box 40,0,60,24 --actual 3");
    CHECK(depth.code == 0);
    CHECK(nlohmann::json::parse(depth.out).contains("relative_depth"));
    CHECK(cli(tmp.path, "depth --map " + q(pole / "depth" / "view0.pfm") + " --pole-box 10,0,5,48 --veg-box 40,0,60,24")
              .code == 1);

    const auto pc = cli(tmp.path, "pointcloud --ply " + q(pole / "cloud.ply"));
    CHECK(pc.code == 0);
    const auto pj = nlohmann::json::parse(pc.out);
    CHECK(std::abs(pj["tilt_deg"].get<double>() - truth[0].cloud_tilt_deg) <= 0.3);
    synth::write_text(tmp.path / "broken.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1\n");
    CHECK(cli(tmp.path, "pointcloud --ply " + q(tmp.path / "broken.ply")).code == 1);

    synth::write_text(tmp.path / "dets.csv", "image_id,class_id,score,x_min,y_min,x_max,y_max\nimg,0,0.9,0,0,10,10\n");
    synth::write_text(tmp.path / "gt.csv", "image_id,class_id,x_min,y_min,x_max,y_max\nimg,0,0,0,10,10\n");
    const auto ev = cli(tmp.path, "eval-map --dets " + q(tmp.path / "dets.csv") + " --gt " + q(tmp.path / "gt.csv"));
    CHECK(ev.code == 0);
    CHECK(nlohmann::json::parse(ev.out)["map"] == 1.0);
}
