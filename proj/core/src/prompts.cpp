#include "coxql/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace coxql {

namespace fs = std::filesystem;

namespace {

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

}  // namespace

const std::vector<std::pair<OperationKind, Demonstration>>& coarse_demonstrations() {
    static const std::vector<std::pair<OperationKind, Demonstration>> demos = {
        {OperationKind::Predict,
         {"What is the prediction for data point number 9130?", "predict"}},
        {OperationKind::Likelihood,
         {"Give me the confidence score for this prediction on id 15?", "likelihood"}},
        {OperationKind::Mistake,
         {"Tell me the amount of data the model predicts falsely.", "mistake"}},
        {OperationKind::Score, {"Give me the accuracy on the data.", "score"}},
        {OperationKind::NlpAttribute, {"Why do you predict instance 2451?", "nlpattribute"}},
        {OperationKind::Rationalize,
         {"Generate a natural language explanation for id 2222.", "rationalize"}},
        {OperationKind::Influence,
         {"Show the most influential important data instance for id 912.", "influence"}},
        {OperationKind::Cfe, {"How would you flip the prediction for id 23?", "cfe"}},
        {OperationKind::Adversarial,
         {"How would you construct an adversarial example for the model's prediction on id 23?",
          "adversarial"}},
        {OperationKind::Augment,
         {"Can you modify and generate a new instance from id 100?", "augment"}},
        {OperationKind::Show, {"Could you show me data point number 215?", "show"}},
        {OperationKind::CountData, {"Count the total number of data points.", "countdata"}},
        {OperationKind::Label, {"Please show what the gold labels are.", "label"}},
        {OperationKind::Keywords,
         {"What are the most frequent keywords in the data?", "keywords"}},
        {OperationKind::Similarity,
         {"Is it possible to retrieve an example that is similar to id 12?", "similarity"}},
        {OperationKind::EditLabel,
         {"Edit the label of id 2894 to the specified label.", "editlabel"}},
        {OperationKind::Learn, {"Apply training to the model using instance 473.", "learn"}},
        {OperationKind::Unlearn, {"Can you unlearn id 530 from the model?", "unlearn"}},
        {OperationKind::Function, {"Tell me a bit more about what I can do here.", "function"}},
        {OperationKind::QaTutorial, {"What's data augmentation?", "qatutorial"}},
        {OperationKind::Data, {"Tell me a bit more about the data please.", "data"}},
        {OperationKind::Model,
         {"It would be very useful if you could provide a description of the model!", "model"}},
        {OperationKind::Domain,
         {"Can you clarify terms or concepts that are relevant to the domain but not directly "
          "related to the system's functionality?",
          "domain"}},
        {OperationKind::Filter, {"Select data point 1000.", "filter"}},
        {OperationKind::PredFilter,
         {"Keep only the instances predicted as positive.", "predfilter"}},
        {OperationKind::LabelFilter,
         {"Show only the examples labeled negative.", "labelfilter"}},
        {OperationKind::LengthFilter,
         {"Restrict to instances longer than 20 tokens.", "lengthfilter"}},
        {OperationKind::PreviousFilter,
         {"Continue with the results from the previous step.", "previousfilter"}},
        {OperationKind::Includes,
         {"Keep instances containing the word weather.", "includes"}},
    };
    return demos;
}

const std::map<OperationKind, std::vector<Demonstration>>& fine_demonstrations() {
    static const std::map<OperationKind, std::vector<Demonstration>> demos = {
        {OperationKind::Predict,
         {{"What is the prediction for data point number 9130?", "filter id 9130 and predict"},
          {"What does the model output for instance 42?", "filter id 42 and predict"}}},
        {OperationKind::Likelihood,
         {{"Give me the confidence score for this prediction on id 15?",
           "filter id 15 and likelihood"},
          {"How certain is the model about data point 8?", "filter id 8 and likelihood"}}},
        {OperationKind::Mistake,
         {{"Tell me the amount of data the model predicts falsely.", "mistake count"},
          {"Show me some data you predict incorrectly.", "mistake sample"}}},
        {OperationKind::Score,
         {{"Give me the accuracy on the data.", "score accuracy"},
          {"What is the f1 score of the model?", "score f1"},
          {"Report the precision please.", "score precision"}}},
        {OperationKind::NlpAttribute,
         {{"Why do you predict instance 2451?", "filter id 2451 and nlpattribute all default"},
          {"Top 5 important words for id 77!", "filter id 77 and nlpattribute topk 5 default"},
          {"Why do you predict instance id 31 using input gradient?",
           "filter id 31 and nlpattribute all input_x_gradient"}}},
        {OperationKind::Rationalize,
         {{"Generate a natural language explanation for id 2222.",
           "filter id 2222 and rationalize"},
          {"Clarify id 5678 with a reason.", "filter id 5678 and rationalize"}}},
        {OperationKind::Influence,
         {{"Show the most influential important data instance for id 912.",
           "filter id 912 and influence topk 1"},
          {"Top 4 most influential training examples for instance 55.",
           "filter id 55 and influence topk 4"}}},
        {OperationKind::Cfe,
         {{"How would you flip the prediction for id 23?", "filter id 23 and cfe"},
          {"What minimal change to instance 7 would alter its prediction?",
           "filter id 7 and cfe"}}},
        {OperationKind::Adversarial,
         {{"How would you construct an adversarial example for the model's prediction on id 23?",
           "filter id 23 and adversarial"},
          {"Craft an adversarial attack on data point 66.", "filter id 66 and adversarial"}}},
        {OperationKind::Augment,
         {{"Can you modify and generate a new instance from id 100?",
           "filter id 100 and augment"},
          {"Create one more example out of instance 12.", "filter id 12 and augment"}}},
        {OperationKind::Show,
         {{"Could you show me data point number 215?", "filter id 215 and show"},
          {"Display instance 5.", "filter id 5 and show"}}},
        {OperationKind::CountData,
         {{"Count the total number of data points.", "countdata"},
          {"How many examples are there?", "countdata"}}},
        {OperationKind::Label,
         {{"Please show what the gold labels are.", "label"},
          {"What is the label distribution?", "label"}}},
        {OperationKind::Keywords,
         {{"What are the most frequent keywords in the data?", "keywords topk 1"},
          {"List the top 10 common words.", "keywords topk 10"}}},
        {OperationKind::Similarity,
         {{"Is it possible to retrieve an example that is similar to id 12?",
           "filter id 12 and similarity topk 1"},
          {"Top 3 instances most similar to data point 9.",
           "filter id 9 and similarity topk 3"}}},
        {OperationKind::EditLabel,
         {{"Edit the label of id 2894 to the specified label.", "filter id 2894 and editlabel"},
          {"Change the gold label of instance 17.", "filter id 17 and editlabel"}}},
        {OperationKind::Learn,
         {{"Apply training to the model using instance 473.", "filter id 473 and learn"},
          {"Fine-tune on data point 90.", "filter id 90 and learn"}}},
        {OperationKind::Unlearn,
         {{"Can you unlearn id 530 from the model?", "filter id 530 and unlearn"},
          {"Remove instance 11 from the model's knowledge.", "filter id 11 and unlearn"}}},
        {OperationKind::Function,
         {{"Tell me a bit more about what I can do here.", "function"},
          {"What operations do you support?", "function"}}},
        {OperationKind::QaTutorial,
         {{"What's data augmentation?", "qatutorial qaaugment"},
          {"How does counterfactual generation work?", "qatutorial qacfe"},
          {"Explain what feature attribution means.", "qatutorial qaattribute"}}},
        {OperationKind::Data,
         {{"Tell me a bit more about the data please.", "data"},
          {"Which dataset are you working with?", "data"}}},
        {OperationKind::Model,
         {{"It would be very useful if you could provide a description of the model!", "model"},
          {"What model is running under the hood?", "model"}}},
        {OperationKind::Domain,
         {{"Can you clarify terms or concepts that are relevant to the domain but not directly "
           "related to the system's functionality?",
           "domain"},
          {"What does hate speech mean in this context?", "domain"}}},
        {OperationKind::Filter,
         {{"Select data point 1000.", "filter id 1000"},
          {"Go to instance 77.", "filter id 77"}}},
        {OperationKind::PredFilter,
         {{"Keep only the instances predicted as positive.", "predfilter positive"},
          {"Filter to rows the model marks negative.", "predfilter negative"}}},
        {OperationKind::LabelFilter,
         {{"Show only the examples labeled negative.", "labelfilter negative"},
          {"Keep the data points whose gold label is positive.", "labelfilter positive"}}},
        {OperationKind::LengthFilter,
         {{"Restrict to instances longer than 20 tokens.", "lengthfilter token gt 20"},
          {"Keep texts shorter than 100 characters.", "lengthfilter character lt 100"}}},
        {OperationKind::PreviousFilter,
         {{"Continue with the results from the previous step.", "previousfilter"},
          {"Work on the instances from the last answer.", "previousfilter"}}},
        {OperationKind::Includes,
         {{"Keep instances containing the word weather.", "includes weather"},
          {"Only keep texts that mention sports.", "includes sports"}}},
    };
    return demos;
}

PromptBundle PromptBundle::builtin() {
    PromptBundle bundle;

    std::ostringstream coarse;
    coarse << "Decide which operation answers the user's question. "
              "Reply with one operation name.\n\n";
    for (const auto& [op, demo] : coarse_demonstrations()) {
        coarse << "Question: " << demo.question << "\nOperation: " << demo.parse << "\n\n";
    }
    coarse << "Question: {question}\nOperation:";
    bundle.coarse_ = coarse.str();

    for (const auto& [op, demos] : fine_demonstrations()) {
        std::ostringstream fine;
        fine << "Write the query for the user's question.\n\n";
        for (const Demonstration& demo : demos) {
            fine << "Question: " << demo.question << "\nParse: " << demo.parse << "\n\n";
        }
        fine << "Question: {question}\nParse:";
        bundle.fine_[op] = fine.str();
    }

    bundle.gd_ =
        "Write the query for the user's question.\n\n"
        "{demonstrations}"
        "Question: {question}\nParse:";
    return bundle;
}

PromptBundle PromptBundle::load_dir(const std::string& dir) {
    PromptBundle bundle;
    bundle.coarse_ = read_file(fs::path(dir) / "coarse.txt");
    bundle.gd_ = read_file(fs::path(dir) / "gd.txt");
    for (const OperationSpec& spec : OperationRegistry::instance().all()) {
        if (is_connective(spec.kind)) continue;
        fs::path p = fs::path(dir) / "fine" / (spec.token + ".txt");
        if (fs::exists(p)) bundle.fine_[spec.kind] = read_file(p);
    }
    if (bundle.fine_.empty()) throw IoError("no fine prompts under " + dir + "/fine");
    return bundle;
}

void PromptBundle::write_dir(const std::string& dir) const {
    fs::create_directories(fs::path(dir) / "fine");
    write_file(fs::path(dir) / "coarse.txt", coarse_);
    write_file(fs::path(dir) / "gd.txt", gd_);
    for (const auto& [op, text] : fine_) {
        write_file(fs::path(dir) / "fine" / (std::string(token_for(op)) + ".txt"), text);
    }
}

std::string PromptBundle::render_coarse(const std::string& question) const {
    return replace_all(coarse_, "{question}", question);
}

std::string PromptBundle::render_fine(OperationKind op, const std::string& question) const {
    auto it = fine_.find(op);
    if (it == fine_.end()) return render_gd({}, question);
    return replace_all(it->second, "{question}", question);
}

std::string PromptBundle::render_gd(const std::vector<Example>& demonstrations,
                                    const std::string& question) const {
    std::ostringstream block;
    for (const Example& demo : demonstrations) {
        block << "Question: " << demo.question << "\nParse: " << demo.gold_parse << "\n\n";
    }
    return replace_all(replace_all(gd_, "{demonstrations}", block.str()), "{question}", question);
}

bool PromptBundle::covers_all_operations() const {
    for (const OperationSpec& spec : OperationRegistry::instance().all()) {
        if (is_connective(spec.kind)) continue;
        if (!fine_.count(spec.kind)) return false;
        if (coarse_.find("Operation: " + spec.token) == std::string::npos) return false;
    }
    return true;
}

}  // namespace coxql
