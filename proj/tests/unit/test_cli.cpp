#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "postscan/cli.hpp"
#include "postscan/corpus.hpp"
#include "postscan/nbayes.hpp"
#include "postscan/pipeline.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using postscan::cli::run_command;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string("'") + POSTSCAN_CLI_PATH + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTableOneCsv =
    "label,text\n"
    "0,\"listening to some music and just chilling....I'll probably regret not getting work done...but till then "
    "i'm just gonna kick back\"\n"
    "0,\"i am working on my media room design and i love love love my client profile\"\n"
    "1,\"more than anything I wish I could ve seen your faces and fought alongside\"\n"
    "1,\"im going to be a professional school shooter\"\n";

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

std::string training_jsonl(std::size_t n) {
  std::mt19937_64 rng(5);
  std::string body;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 3 != 0;
    nlohmann::ordered_json rec;
    rec["label"] = pos ? 1 : 0;
    rec["text"] = synthetic::random_sentence(rng, pos ? synthetic::concerning_words() : synthetic::benign_words(), 2, 7);
    body += rec.dump() + "\n";
  }
  return body;
}

}  // namespace

TEST_CASE("prep cleans the sample table into four records") {
  TempDir dir;
  const auto in = dir.write("table.csv", kTableOneCsv);
  const auto r = run({"prep", "--in", in.string()});
  REQUIRE(r.code == 0);
  const auto recs = lines(r.out);
  REQUIRE(recs.size() == 4);
  const auto last = nlohmann::json::parse(recs[3]);
  CHECK(last["label"] == 1);
  CHECK(last["text"] == "im going professional school shooter");
  CHECK(nlohmann::json::parse(recs[0])["label"] == 0);

  const auto caption = run({"prep", "--in", in.string(), "--preset", "caption"});
  CHECK(nlohmann::json::parse(lines(caption.out)[3])["text"] == "im going to be a professional school shooter");

  const auto to_file = run({"--out", (dir / "clean.jsonl").string(), "prep", "--in", in.string()});
  CHECK(to_file.code == 0);
  CHECK(slurp(dir / "clean.jsonl") == r.out);
}

TEST_CASE("train is deterministic and eval reports on the held-out split") {
  TempDir dir;
  const auto data = dir.write("corpus.jsonl", training_jsonl(120));
  const auto a = (dir / "a.json").string();
  const auto b = (dir / "b.json").string();
  REQUIRE(run({"train", "--data", data.string(), "--variant", "cnb", "--split", "0.2", "--seed", "7", "--out", a}).code == 0);
  REQUIRE(run({"--seed", "7", "--out", b, "train", "--data", data.string(), "--variant", "cnb", "--split", "0.2"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  const auto model = postscan::nbayes::load_model(a);
  CHECK(model.variant() == postscan::nbayes::Variant::Complement);
  CHECK(model.class_doc_count(postscan::Label::Benign) + model.class_doc_count(postscan::Label::Concerning) == 96);

  const auto report = (dir / "report.json").string();
  const auto roc = (dir / "roc.csv").string();
  const auto e = run({"eval", "--model", a, "--data", data.string(), "--split", "0.2", "--seed", "7", "--roc-csv", roc,
                      "--out", report});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("Accuracy") != std::string::npos);
  const auto json = nlohmann::json::parse(slurp(report));
  CHECK(json["accuracy"] == 1.0);
  CHECK(json["confusion"]["tp"].get<int>() + json["confusion"]["fn"].get<int>() + json["confusion"]["tn"].get<int>() +
            json["confusion"]["fp"].get<int>() ==
        24);
  CHECK(slurp(roc).rfind("fpr,tpr\n", 0) == 0);

  for (const char* v : {"mnb", "bnb"})
    CHECK(run({"train", "--data", data.string(), "--variant", v, "--out", (dir / (std::string(v) + ".json")).string()})
              .code == 0);
}

TEST_CASE("bleu on a perfect-match fixture") {
  TempDir dir;
  const auto refs = dir.write("refs.jsonl",
                              "{\"id\":\"1\",\"references\":[\"Two guns laying over a blue sheet .\",\"a gun\"]}\n"
                              "{\"id\":\"2\",\"references\":[\"a person standing in a room\"]}\n");
  const auto hyps = dir.write("hyps.jsonl",
                              "{\"id\":\"1\",\"caption\":\"two guns laying over a blue sheet\"}\n"
                              "{\"id\":\"2\",\"caption\":\"a person standing in a room\"}\n");
  const auto r = run({"bleu", "--refs", refs.string(), "--hyps", hyps.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out == "BLEU-1 1.0000 BLEU-2 1.0000\n");
  CHECK(run({"bleu", "--refs", refs.string(), "--hyps", hyps.string(), "--max-order", "1"}).out == "BLEU-1 1.0000\n");

  const auto missing = dir.write("bad.jsonl", "{\"id\":\"9\",\"caption\":\"x\"}\n");
  CHECK(run({"bleu", "--refs", refs.string(), "--hyps", missing.string()}).code == 2);
}

TEST_CASE("caption build, run, eval and augment over an image corpus") {
  TempDir dir;
  auto world = synthetic::make_world(3, 4, 12);
  std::mt19937_64 rng(12);
  for (auto& item : world.caption_corpus) item.image = synthetic::random_image(rng, 8, 6);  // distinct histograms
  synthetic::write_world(world, dir.path());
  const auto index = (dir / "index.json").string();
  const auto b = run({"caption", "build", "--images", (dir / "images").string(), "--out", index});
  REQUIRE(b.code == 0);
  CHECK(b.err.find("12 images, 60 captions") != std::string::npos);

  const auto first = (dir / "images" / world.caption_corpus[0].name).string();
  const auto r = run({"caption", "run", "--index", index, first});
  REQUIRE(r.code == 0);
  CHECK(r.out == postscan::textprep::clean(world.caption_corpus[0].captions[0],
                                           postscan::textprep::CleanConfig::caption_preset()) +
                     "\n");

  const auto e = run({"caption", "eval", "--index", index, "--images", (dir / "images").string()});
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("BLEU-1 1.0000", 0) == 0);

  const auto combo = run({"caption", "build", "--images", (dir / "images").string(), "--combination", "1", "--out",
                          (dir / "c1.json").string()});
  CHECK(combo.code == 0);
  CHECK(combo.err.find("12 images") != std::string::npos);
  CHECK(run({"caption", "build", "--images", (dir / "images").string(), "--combination", "9", "--out",
             (dir / "c9.json").string()})
            .code == 1);

  // augment reads school/mass categories from the shipped recipe; the world only has mass + benign.
  const auto recipe = (std::filesystem::path(postscan::data_dir()) / "augment_recipe.json").string();
  const auto aug_dir = (dir / "aug").string();
  const auto a = run({"augment", "--images", (dir / "images").string(), "--recipe", recipe, "--out", aug_dir});
  REQUIRE(a.code == 0);
  const auto augmented = postscan::corpus::load_image_corpus(aug_dir);
  CHECK(augmented.size() == 6);
  for (const auto& item : augmented) {
    CHECK(item.augmented);
    CHECK(item.category == postscan::corpus::Category::MassShooting);
  }
  const auto aug2 = (dir / "aug2").string();
  REQUIRE(run({"augment", "--images", (dir / "images").string(), "--recipe", recipe, "--out", aug2}).code == 0);
  CHECK(slurp(std::filesystem::path(aug_dir) / "manifest.jsonl") == slurp(std::filesystem::path(aug2) / "manifest.jsonl"));
  CHECK(slurp(std::filesystem::path(aug_dir) / "aug_0000_cap_1.ppm") == slurp(std::filesystem::path(aug2) / "aug_0000_cap_1.ppm"));
}

TEST_CASE("classify and report end to end, with and without a config file") {
  TempDir dir;
  const auto world = synthetic::make_world(8, 30);
  synthetic::write_world(world, dir.path());
  const auto model = (dir / "model.json").string();
  const auto index = (dir / "index.json").string();
  REQUIRE(run({"train", "--data", (dir / "training.jsonl").string(), "--split", "0", "--out", model}).code == 0);
  REQUIRE(run({"caption", "build", "--images", (dir / "images").string(), "--out", index}).code == 0);

  const auto v1 = (dir / "v1.jsonl").string();
  const auto c = run({"classify", "--posts", (dir / "posts.jsonl").string(), "--model", model, "--index", index,
                      "--out", v1});
  REQUIRE(c.code == 0);
  const auto verdicts = postscan::pipeline::parse_verdicts(slurp(v1));
  CHECK(verdicts.size() == 30);

  dir.write("pipeline.toml", "version = 1\nmodel = \"model.json\"\nindex = \"index.json\"\ncaptioner = \"knn\"\n");
  const auto v2 = (dir / "v2.jsonl").string();
  REQUIRE(run({"--config", (dir / "pipeline.toml").string(), "--out", v2, "classify", "--posts",
               (dir / "posts.jsonl").string()})
              .code == 0);
  CHECK(slurp(v1) == slurp(v2));

  const auto rep = run({"report", "--verdicts", v1, "--json", (dir / "eval.json").string()});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.find("Accuracy") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(dir / "eval.json"))["accuracy"] == 1.0);

  // image posts without any captioner are a data error
  CHECK(run({"classify", "--posts", (dir / "posts.jsonl").string(), "--model", model, "--captioner", "none"}).code == 2);
  dir.write("bad.toml", "version = 1\nmodel = \"model.json\"\nflavour = \"x\"\n");
  CHECK(run({"--config", (dir / "bad.toml").string(), "classify", "--posts", (dir / "posts.jsonl").string()}).code == 2);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({"frobnicate"}).code == 1);
  const auto unknown = run({"prep", "--bogus"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"prep", "--in", (dir / "missing.csv").string()}).code == 2);
  const auto bad = dir.write("bad.csv", "label,text\n7,hello\n");
  const auto r = run({"prep", "--in", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
  const auto data = dir.write("c.jsonl", training_jsonl(20));
  CHECK(run({"train", "--data", data.string(), "--variant", "gnb", "--out", (dir / "m.json").string()}).code == 1);
  CHECK(run({"train", "--data", data.string(), "--split", "1.5", "--out", (dir / "m.json").string()}).code == 1);
  const auto one = dir.write("one.jsonl", "{\"label\":1,\"text\":\"rifle\"}\n{\"label\":1,\"text\":\"ammo\"}\n");
  CHECK(run({"train", "--data", one.string(), "--split", "0", "--out", (dir / "m.json").string()}).code == 2);

  CHECK(run_binary("frobnicate") == 1);
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("prep --in '" + (dir / "missing.csv").string() + "'") == 2);
  CHECK(run_binary("prep --in '" + bad.string() + "'") == 2);
}
