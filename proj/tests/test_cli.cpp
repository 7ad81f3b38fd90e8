#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "boltzkit/cli.hpp"

using namespace boltzkit;

namespace {

int count_lines(const std::string& s) {
  int n = 0;
  for (std::size_t p = 0; (p = s.find("\r\n", p)) != std::string::npos; p += 2) ++n;
  return n;
}

int parse_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Config, ParsesExamples) {
  auto a = parse_config("command = boardgame\nk = 5");
  EXPECT_EQ(a.command, "boardgame");
  EXPECT_EQ(a.integer("k"), 5);
  EXPECT_FALSE(a.flag("identity"));

  auto b = parse_config("command = strichartz\nd = 2\np = 4.0\nlevels = 4,8,16,32");
  EXPECT_EQ(b.integer("d"), 2);
  EXPECT_EQ(b.real("p"), 4.0);
  EXPECT_EQ(b.list("levels"), (std::vector<double>{4, 8, 16, 32}));
  EXPECT_EQ(b.real("slack"), 0.1);  // default filled

  EXPECT_THROW(parse_config("command = bogus"), ParseError);
}

TEST(Config, CommentsBlankLinesAndPositionalCommand) {
  auto c = parse_config("# header\n\nk = 3   # depth\nseed = 9\n", "boardgame");
  EXPECT_EQ(c.integer("k"), 3);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.resolved().at("command"), "boardgame");
  EXPECT_THROW(parse_config("command = boardgame\nk = 3", "solve"), ParseError);
  EXPECT_THROW(parse_config("k = 3", "bogus"), ParseError);
}

TEST(Config, ErrorsNameTheLine) {
  EXPECT_EQ(parse_error_line("command = boardgame\nk = 5\nwidth = 2"), 3);
  EXPECT_EQ(parse_error_line("command = strichartz\n\np = four"), 3);
  EXPECT_EQ(parse_error_line("command = strichartz\nlevels = 4,x,16"), 2);
  EXPECT_EQ(parse_error_line("command = boardgame\nk = 2.5"), 2);
  EXPECT_EQ(parse_error_line("command = boardgame\nk = 1\nk = 2"), 3);
  EXPECT_EQ(parse_error_line("command = boardgame\njust text"), 2);
  EXPECT_EQ(parse_error_line("command = boardgame\nk = 2\nseed = -4"), 3);
  EXPECT_EQ(parse_error_line("command = solve\ninit = vacuum"), 2);
  // k has no default for the board game
  EXPECT_THROW(parse_config("command = boardgame\n"), ParseError);
}

TEST(Run, BoardGameListsCatalanRows) {
  auto r = run(parse_config("command = boardgame\nk = 5"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(count_lines(r.csv), 1 + 42);
  EXPECT_EQ(r.json["classes"], 42);
  EXPECT_EQ(r.json["verdict"], "pass");
}

TEST(Run, ImpossibleSlackFails) {
  auto r = run(parse_config(
      "command = strichartz\nlevels = 2,4,8\nsamples = 2\ntime_samples = 5\nnv = 8\nprobe = false\nslack = -1"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.json["verdict"], "fail");
}

TEST(Run, IdenticalUniquenessConfigsGiveZeroGaps) {
  auto r = run(parse_config("command = uniqueness\ndt_a = 0.02\ndt_b = 0.02\nt_end = 0.04\ntimes = 0.02,0.04"));
  EXPECT_EQ(r.exit_code, 0);
  for (const auto& row : r.json["rows"]) {
    EXPECT_EQ(row["l2"], 0.0);
    EXPECT_EQ(row["sobolev"], 0.0);
  }
}

TEST(Run, ReportsAreDeterministicAndSelfDescribing) {
  const std::string text = "command = strichartz\nlevels = 2,4,8\nsamples = 3\ntime_samples = 5\nnv = 8\nseed = 4";
  auto a = run(parse_config(text)), b = run(parse_config(text));
  EXPECT_EQ(a.json.dump(), b.json.dump());
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.json["convention_version"], convention_version);
  EXPECT_EQ(a.json["config"]["levels"], "2,4,8");
  EXPECT_EQ(a.json["config"]["p"], "4");  // default recorded
  EXPECT_EQ(a.json["config"]["seed"], "4");
  EXPECT_FALSE(a.json.contains("wall_seconds"));
  EXPECT_TRUE(a.metadata.contains("wall_seconds"));
  for (const char* key : {"estimate_id", "params", "levels", "ratios", "fitted_slope", "theory_slope", "verdict",
                          "samples", "seed"})
    EXPECT_TRUE(a.json.contains(key)) << key;
}

TEST(Run, DuhamelSolveAndAnnihilationSmoke) {
  auto d = run(parse_config("command = duhamel\ndepths = 2\nt1 = 0.1\nnodes = 2"));
  EXPECT_EQ(d.exit_code, 0) << d.json.dump();
  auto s = run(parse_config("command = solve\ndt = 0.02\nt_end = 0.04\ntimes = 0,0.04"));
  EXPECT_EQ(s.exit_code, 0);
  ASSERT_EQ(s.extra_files.size(), 1u);
  EXPECT_EQ(s.extra_files[0].second.size(), 2 * make_grid(2, 4, 8, 4).size() * sizeof(cplx));
  auto a = run(parse_config("command = annihilation\nnv = 8\nv_max = 16"));
  EXPECT_EQ(a.exit_code, 0);
}

TEST(Run, ModuleErrorsPropagate) {
  EXPECT_THROW(run(parse_config("command = solve\ngamma = 0.5")), UnsupportedRegimeError);
  EXPECT_THROW(run(parse_config("command = solve\nnx = 6")), ConfigurationError);
}

TEST(Csv, QuotesPerRfc4180) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Binary, ExitCodesAndErrorDocument) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "boltzkit_cli_test";
  fs::create_directories(dir);
  const std::string exe = BOLTZKIT_EXE;
  auto sh = [](const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  std::ofstream(dir / "bg.cfg") << "command = boardgame\nk = 4\n";
  EXPECT_EQ(sh(exe + " boardgame --config " + (dir / "bg.cfg").string() + " --out " + (dir / "bg").string()), 0);
  EXPECT_EQ(count_lines(slurp(dir / "bg.csv")), 1 + 14);
  const auto first = slurp(dir / "bg.json");
  EXPECT_EQ(sh(exe + " boardgame --config " + (dir / "bg.cfg").string() + " --out " + (dir / "bg").string()), 0);
  EXPECT_EQ(slurp(dir / "bg.json"), first);

  EXPECT_EQ(sh(exe + " bogus --config " + (dir / "bg.cfg").string() + " --out " + (dir / "err").string()), 2);
  auto err = Json::parse(slurp(dir / "err.json"));
  EXPECT_EQ(err["error"]["kind"], "parse");

  std::ofstream(dir / "bad.cfg") << "command = solve\nnx = 6\n";
  EXPECT_EQ(sh(exe + " solve --config " + (dir / "bad.cfg").string() + " --out " + (dir / "bad").string()), 2);
  EXPECT_EQ(Json::parse(slurp(dir / "bad.json"))["error"]["kind"], "configuration");

  std::ofstream(dir / "ff.cfg")
      << "command = strichartz\nlevels = 2,4,8\nsamples = 2\ntime_samples = 5\nnv = 8\nprobe = false\nslack = -1\n";
  EXPECT_EQ(sh(exe + " strichartz --config " + (dir / "ff.cfg").string() + " --out " + (dir / "ff").string()), 1);
  EXPECT_EQ(sh(exe + " boardgame"), 2);  // missing --config
  fs::remove_all(dir);
}
