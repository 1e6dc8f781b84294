#pragma once

// Helpers for driving the qotk binary from tests, plus the scenario matrix
// shared by the CLI tests and the acceptance runner.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qot::testkit {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct CommandResult {
  int status;
  std::string out;
  std::string err;
};

// Runs qotk with args (already shell-quoted where needed); stdout and stderr
// are captured through files in scratch.
inline CommandResult run_qotk(const std::string& args, const fs::path& scratch) {
  fs::create_directories(scratch);
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + QOTK_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return {status, read_file(out), read_file(err)};
}

inline fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qotk_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliCase {
  std::string name;
  std::string input;  // written to <dir>/input.json when non-empty
  std::string args;   // "{in}" expands to that file
};

inline std::vector<CliCase> cli_matrix() {
  const std::string rot_qfa =
      R"({"states":["q0","acc","rej"],"alphabet":["a"],"initial":"q0","accept":["acc"],"reject":["rej"],
"transitions":[
{"q":"q0","a":"a","q2":"q0","D":1,"amp":0.6},{"q":"q0","a":"a","q2":"acc","D":1,"amp":0.64},{"q":"q0","a":"a","q2":"rej","D":1,"amp":0.48},
{"q":"acc","a":"a","q2":"q0","D":1,"amp":-0.8},{"q":"acc","a":"a","q2":"acc","D":1,"amp":0.48},{"q":"acc","a":"a","q2":"rej","D":1,"amp":0.36},
{"q":"rej","a":"a","q2":"acc","D":1,"amp":-0.6},{"q":"rej","a":"a","q2":"rej","D":1,"amp":0.8}],
"word":"a","tape_length":3,"max_steps":40})";
  return {
      {"transport_solve",
       R"({"kind":"transport","seed":3,"payload":{"mu":[0.5,0.5],"nu":[0.5,0.5],"cost":[[0,1],[1,0]]}})",
       "transport solve --in {in}"},
      {"transport_anneal",
       R"({"mu":[0.25,0.25,0.5],"nu":[0.5,0.25,0.25],"cost":[[0.3,0.9,0.1],[0.5,0.2,0.8],[0.05,0.7,0.4]],
"penalty_weight":4,"solver":"annealing","schedule":{"sweeps":200,"restarts":4}})",
       "transport solve --in {in} --seed 17"},
      {"transport_energy", R"({"mu":[0.5,0.5],"nu":[0.5,0.5],"cost":[[0,1],[1,0]],"plan":[[0,1],[1,0]]})",
       "transport energy --in {in}"},
      {"qot_eval",
       R"({"variant":"baseline","source":[[0.6,0],[0,0.8]],"target":[[0,0.8],[0.6,0]],
"kernel":{"values":[[0,1],[1,0]]},"operator":{"matrix":[[0,1],[1,0]]}})",
       "qot eval --in {in}"},
      {"qot_optimize",
       R"({"variant":"v1_distribution","source":[[0.6,0],[0,0.8],[0,0]],"target_distribution":[0.2,0.3,0.5],
"kernel":{"values":[[0,1,4],[1,0,1],[4,1,0]]}})",
       "qot optimize --in {in} --budget 1500 --restarts 3 --seed 2"},
      {"walk_run", "", "walk run --steps 4 --coin hadamard"},
      {"walk_optimize", R"({"steps":2,"target":{"distribution":[0.5,0,0,0,0.5]},"budget":600,"restarts":2})",
       "walk optimize --in {in} --seed 3"},
      {"qfa_track", rot_qfa, "qfa run --in {in}"},
      {"qfa_sample", rot_qfa, "qfa run --in {in} --mode trajectory_sampling --trajectories 500 --seed 7"},
      {"qfa_cost", rot_qfa, "qfa cost --in {in}"},
      {"qfa_minimize", "", "qfa minimize --word a --tape-length 2 --budget 400 --seed 1"},
      {"game_payoff", "", "game payoff --X 2 --Y 1 --Z 3"},
      {"game_threshold", "", "game threshold --X 3 --Y 1 --r 0.5"},
      {"game_expectation", R"({"X":2,"Y":1,"Z":3,"delta":0.9,"r":0.7,"horizon":50,
"deviation":{"agent":0,"round":2,"a":0.6,"b":0.8}})",
       "game simulate --in {in}"},
      {"game_sample", R"({"X":2,"Y":1,"Z":3,"delta":0.9,"r":0.7,"horizon":30,"mode":"sample","runs":200,
"deviation":{"agent":1,"round":1,"a":0.6,"b":0.8},"monitoring":"private"})",
       "game simulate --in {in} --seed 9"},
  };
}

// Runs one matrix case into dir/out; returns the exit status.
inline CommandResult run_case(const CliCase& c, const fs::path& dir) {
  std::string args = c.args;
  if (!c.input.empty()) {
    const fs::path in = dir / "input.json";
    write_file(in, c.input);
    const auto at = args.find("{in}");
    if (at != std::string::npos) args.replace(at, 4, "\"" + in.string() + "\"");
  }
  args += " --out \"" + (dir / "out").string() + "\"";
  return run_qotk(args, dir);
}

}  // namespace qot::testkit
