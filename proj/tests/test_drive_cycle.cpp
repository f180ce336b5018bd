#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "shev/drive_cycle.hpp"
#include "shev/errors.hpp"

using namespace shev;

namespace {

std::filesystem::path data_dir()
{
    return std::filesystem::path(SHEV_DATA_DIR);
}

}  // namespace

TEST_CASE("parse_cycle: minimal file")
{
    const auto c = parse_cycle("t_s,v_mps\n0,0\n1,2\n2,4");
    REQUIRE(c.size() == 3);
    CHECK(c.speeds()[2] == 4.0);
    CHECK(c.duration() == 2.0);
    CHECK(c.max_speed() == 4.0);
}

TEST_CASE("parse_cycle: CRLF, blank lines and mph")
{
    const auto c = parse_cycle("t_s,v_mps\r\n0,0\r\n\r\n1,10\r\n", "x", SpeedUnit::MilesPerHour);
    REQUIRE(c.size() == 2);
    CHECK(c.speeds()[1] == doctest::Approx(4.4704));
}

TEST_CASE("parse_cycle: rejects bad input")
{
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0\n1,-3"), ValidationError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0\n2,1\n1,1"), ValidationError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0\n0,1"), ValidationError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n1,0\n2,1"), ValidationError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0"), ValidationError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0\n1,abc"), ParseError);
    CHECK_THROWS_AS((void)parse_cycle("t_s,v_mps\n0,0\n1"), ParseError);
    CHECK_THROWS_AS((void)parse_cycle("time,speed\n0,0\n1,1"), ParseError);
}

TEST_CASE("resample: identity on grid")
{
    const auto c = parse_cycle("t_s,v_mps\n0,0\n1,2\n2,4");
    const auto r = resample(c, 1.0);
    CHECK(r.times() == c.times());
    CHECK(r.speeds() == c.speeds());
}

TEST_CASE("resample: linear midpoint")
{
    const auto c = parse_cycle("t_s,v_mps\n0,0\n2,4");
    const auto r = resample(c, 1.0);
    REQUIRE(r.size() == 3);
    CHECK(r.speeds()[0] == 0.0);
    CHECK(r.speeds()[1] == doctest::Approx(2.0));
    CHECK(r.speeds()[2] == 4.0);
}

TEST_CASE("resample: idempotent and dt checked")
{
    const auto c = parse_cycle("t_s,v_mps\n0,0\n0.7,1.3\n3.1,2\n5,0.5");
    const auto once = resample(c, 0.5);
    const auto twice = resample(once, 0.5);
    CHECK(once.times() == twice.times());
    CHECK(once.speeds() == twice.speeds());
    CHECK_THROWS_AS((void)resample(c, 0.0), ValidationError);
    CHECK_THROWS_AS((void)resample(c, -1.0), ValidationError);
}

TEST_CASE("reference_trajectory: trapezoid")
{
    const auto ref = reference_trajectory(parse_cycle("t_s,v_mps\n0,0\n1,2\n2,4"), 1.0);
    REQUIRE(ref.size() == 3);
    CHECK(ref.s_ref[0] == 0.0);
    CHECK(ref.s_ref[1] == 1.0);
    CHECK(ref.s_ref[2] == 4.0);

    const auto flat = reference_trajectory(parse_cycle("t_s,v_mps\n0,10\n1,10\n2,10\n3,10"), 1.0);
    CHECK(flat.s_ref == std::vector<double>{0, 10, 20, 30});

    const auto zero = reference_trajectory(parse_cycle("t_s,v_mps\n0,0\n1,0\n2,0"), 1.0);
    CHECK(zero.s_ref == std::vector<double>{0, 0, 0});
}

TEST_CASE("reference_trajectory: differences are trapezoid averages on UDDS")
{
    const auto cycle = resample(load_cycle(data_dir() / "udds.csv"), 1.0);
    const auto ref = reference_trajectory(cycle, 1.0);
    REQUIRE(ref.size() == 1370);
    for (std::size_t k = 0; k + 1 < ref.size(); ++k) {
        const double step = ref.s_ref[k + 1] - ref.s_ref[k];
        CHECK(step >= 0.0);
        CHECK(std::abs(step - 0.5 * (ref.v_ref[k] + ref.v_ref[k + 1])) <= 1e-9);
    }
}

TEST_CASE("preview: in range and beyond the end")
{
    const auto ref = reference_trajectory(parse_cycle("t_s,v_mps\n0,0\n1,2\n2,4"), 1.0);
    const auto w = preview(ref, 0, 2);
    REQUIRE(w.size() == 3);
    CHECK(w.s_ref == ref.s_ref);

    const auto hold = preview(ref, 2, 2);
    REQUIRE(hold.size() == 3);
    CHECK(hold.s_ref == std::vector<double>{4, 8, 12});
    CHECK(hold.v_ref == std::vector<double>{4, 4, 4});

    const auto stop = reference_trajectory(parse_cycle("t_s,v_mps\n0,0\n1,2\n2,0"), 1.0);
    const auto parked = preview(stop, 2, 10);
    REQUIRE(parked.size() == 11);
    for (std::size_t i = 0; i < parked.size(); ++i) {
        CHECK(parked.s_ref[i] == stop.s_ref[2]);
        CHECK(parked.v_ref[i] == 0.0);
    }
}

TEST_CASE("preview: constant-speed hold with dt 1")
{
    const auto ref = reference_trajectory(parse_cycle("t_s,v_mps\n0,5\n1,5"), 1.0);
    const auto w = preview(ref, 1, 2);
    CHECK(w.s_ref == std::vector<double>{5, 10, 15});
}

TEST_CASE("bundled cycles load")
{
    const auto udds = load_cycle(data_dir() / "udds.csv");
    CHECK(udds.size() == 1370);
    CHECK(udds.duration() == 1369.0);
    const auto pulse = load_cycle(data_dir() / "synthetic_pulse.csv");
    CHECK(pulse.duration() == 120.0);
    CHECK_THROWS_AS((void)load_cycle(data_dir() / "missing.csv"), ValidationError);
}
