#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <string>

using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const char* bin = std::getenv("QDES_CLI");
    REQUIRE(bin != nullptr);
    std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

json strip_elapsed(const std::string& text) {
    json j = json::parse(text);
    j.erase("elapsed_ms");
    return j;
}

}  // namespace

TEST_CASE("verify subcommands report residuals and exit 0") {
    auto res = run_cli("verify fact1 --n 2 --k 2");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(double(j["results"]["residual"]) < 1e-10);
    CHECK(j["config"]["subcommand"] == "verify fact1");
    CHECK(j["config"]["params"]["n"] == 2);
    CHECK(uint64_t(j["config"]["master_seed"]) == 0xC0FFEEull);
}

TEST_CASE("resources table mirrors the calculator") {
    auto res = run_cli("resources table --n 16 --k 2 --eps 0.1");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    auto rows = j["results"]["rows"];
    REQUIRE(rows.size() == 4);
    for (auto& row : rows) {
        CHECK(row["xi"] == 11);
        CHECK(int(row["depth"]) > 0);
        CHECK(int(row["ancilla"]) > 0);
        if (row["family"] == "blocked_phase") CHECK(row["randomness_bits"] == 2 * 16 * 2);
        else CHECK(row["randomness_bits"] == 3 * 16 * 2 + 40);
    }
}

TEST_CASE("same argv and seed give byte-identical reports") {
    std::string args = "state-error --family randomphase --n 2 --k 2 --mode mc --trials 300";
    auto a = run_cli(args);
    auto b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(strip_elapsed(a.out).dump() == strip_elapsed(b.out).dump());
    auto c = run_cli(args + " --seed 99");
    CHECK(strip_elapsed(a.out).dump() != strip_elapsed(c.out).dump());
}

TEST_CASE("exact state error is recorded with zero-width interval") {
    auto res = run_cli("state-error --family blockedphase --n 2 --xi 1 --k 2 --mode exact");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(double(j["results"]["value"]) >= 0.0);
    CHECK(j["results"]["mode"] == "exact");
}

TEST_CASE("unknown flags and bad preconditions exit 2") {
    CHECK(run_cli("verify fact1 --bogus 3").exit_code == 2);
    CHECK(run_cli("nonsense").exit_code == 2);
    // k^2/eps too large for the target patch budget
    CHECK(run_cli("resources table --n 4 --k 4 --eps 0.01").exit_code == 2);
    CHECK(run_cli("state-error --family nope --n 2 --k 2").exit_code == 2);
    CHECK(run_cli("circuit build --n 3 --k 2 --mode sideways").exit_code == 2);
}

TEST_CASE("resource limits exit 3") {
    CHECK(run_cli("verify fact1 --n 5 --k 5").exit_code == 3);
    CHECK(run_cli("circuit build --n 63 --k 2").exit_code == 3);
}

TEST_CASE("circuit build emits a parseable serialization") {
    auto res = run_cli("circuit build --n 3 --k 2 --mode low_ancilla");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(int(j["results"]["depth"]) > 0);
    std::string text = j["results"]["circuit_text"];
    CHECK(text.rfind("wires ", 0) == 0);
}

TEST_CASE("distinguish runs and supports csv output") {
    auto res = run_cli("distinguish --family product --n 4 --xi 1 --trials 400");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["results"]["source"]["M"] == 4);
    CHECK(double(j["results"]["advantage"]) > -1.0);

    auto csv = run_cli("distinguish --family haar --n 4 --xi 1 --trials 100 --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.out.rfind("patch_index,rate,stderr", 0) == 0);
    // csv is rejected where no tabular payload exists
    CHECK(run_cli("verify fact1 --n 1 --k 2 --format csv").exit_code == 2);
}

TEST_CASE("field selftest and measurable identity baseline") {
    auto res = run_cli("field selftest --trials 50");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["results"]["failures"] == 0);

    auto me = run_cli("measurable --family identity --n 2 --k 1");
    REQUIRE(me.exit_code == 0);
    json m = json::parse(me.out);
    CHECK(m["results"]["exact"] == true);
    CHECK(double(m["results"]["value"]) > 0.0);
}
