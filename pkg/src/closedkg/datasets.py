"""Bundled synthetic knowledge graph for demos and tests.

A small medical KG: 58 entities in five classes (disease, symptom, drug,
examination, treatment) under one root, 79 undirected facts, and a short
corpus whose entity coverage is easy to count by hand (24 of 42 tokens are
covered by entity labels). The data ships as TSV/text files inside the
package; `write_toy_kg` regenerates them from the literals below.
"""

from importlib import resources
from pathlib import Path

from .graph import load_graph
from .text import tokenize

__all__ = ["toy_paths", "load_toy_kg", "load_toy_corpus", "write_toy_kg"]

TOY_ROOT = "medical concept"

TOY_CLASSES = {
    "disease": [
        "asthma", "bronchitis", "pneumonia", "influenza", "common cold",
        "hypertension", "angina", "heart failure", "migraine", "gastritis",
        "anemia", "diabetes",
    ],
    "symptom": [
        "cough", "fever", "wheezing", "chest pain", "shortness of breath",
        "headache", "fatigue", "nausea", "dizziness", "palpitations",
        "sore throat", "runny nose", "abdominal pain", "pallor",
    ],
    "drug": [
        "salbutamol", "amoxicillin", "oseltamivir", "ibuprofen", "paracetamol",
        "amlodipine", "nitroglycerin", "metoprolol", "sumatriptan",
        "omeprazole", "ferrous sulfate", "metformin",
    ],
    "examination": [
        "chest x ray", "spirometry", "blood test", "blood pressure test",
        "electrocardiogram", "endoscopy", "glucose test", "sputum culture",
        "echocardiogram", "hemoglobin test",
    ],
    "treatment": [
        "inhaled therapy", "antibiotic course", "antiviral course", "rest",
        "low salt diet", "bypass surgery", "iron supplementation",
        "insulin therapy", "physical therapy", "stress management",
    ],
}

TOY_TRIPLES = [
    ("asthma", "has symptom", "wheezing"),
    ("asthma", "has symptom", "shortness of breath"),
    ("asthma", "treated by", "salbutamol"),
    ("asthma", "confirmed by", "spirometry"),
    ("asthma", "managed with", "inhaled therapy"),
    ("bronchitis", "has symptom", "cough"),
    ("bronchitis", "has symptom", "wheezing"),
    ("bronchitis", "treated by", "amoxicillin"),
    ("bronchitis", "confirmed by", "chest x ray"),
    ("bronchitis", "managed with", "antibiotic course"),
    ("pneumonia", "has symptom", "fever"),
    ("pneumonia", "has symptom", "cough"),
    ("pneumonia", "has symptom", "chest pain"),
    ("pneumonia", "treated by", "amoxicillin"),
    ("pneumonia", "confirmed by", "chest x ray"),
    ("pneumonia", "confirmed by", "sputum culture"),
    ("pneumonia", "managed with", "antibiotic course"),
    ("influenza", "has symptom", "fever"),
    ("influenza", "has symptom", "headache"),
    ("influenza", "has symptom", "fatigue"),
    ("influenza", "treated by", "oseltamivir"),
    ("influenza", "managed with", "antiviral course"),
    ("common cold", "has symptom", "cough"),
    ("common cold", "has symptom", "sore throat"),
    ("common cold", "has symptom", "runny nose"),
    ("common cold", "treated by", "paracetamol"),
    ("common cold", "managed with", "rest"),
    ("asthma", "related to", "bronchitis"),
    ("bronchitis", "related to", "pneumonia"),
    ("influenza", "related to", "pneumonia"),
    ("common cold", "related to", "influenza"),
    ("hypertension", "has symptom", "headache"),
    ("hypertension", "has symptom", "dizziness"),
    ("hypertension", "treated by", "amlodipine"),
    ("hypertension", "confirmed by", "blood pressure test"),
    ("hypertension", "managed with", "low salt diet"),
    ("angina", "has symptom", "chest pain"),
    ("angina", "has symptom", "palpitations"),
    ("angina", "treated by", "nitroglycerin"),
    ("angina", "confirmed by", "electrocardiogram"),
    ("heart failure", "has symptom", "shortness of breath"),
    ("heart failure", "has symptom", "fatigue"),
    ("heart failure", "treated by", "metoprolol"),
    ("heart failure", "confirmed by", "echocardiogram"),
    ("heart failure", "managed with", "bypass surgery"),
    ("heart failure", "managed with", "physical therapy"),
    ("hypertension", "related to", "heart failure"),
    ("angina", "related to", "heart failure"),
    ("hypertension", "related to", "angina"),
    ("migraine", "has symptom", "headache"),
    ("migraine", "has symptom", "nausea"),
    ("migraine", "treated by", "sumatriptan"),
    ("migraine", "treated by", "ibuprofen"),
    ("migraine", "managed with", "stress management"),
    ("gastritis", "has symptom", "abdominal pain"),
    ("gastritis", "has symptom", "nausea"),
    ("gastritis", "treated by", "omeprazole"),
    ("gastritis", "confirmed by", "endoscopy"),
    ("anemia", "has symptom", "fatigue"),
    ("anemia", "has symptom", "pallor"),
    ("anemia", "has symptom", "dizziness"),
    ("anemia", "treated by", "ferrous sulfate"),
    ("anemia", "confirmed by", "hemoglobin test"),
    ("anemia", "confirmed by", "blood test"),
    ("anemia", "managed with", "iron supplementation"),
    ("diabetes", "has symptom", "fatigue"),
    ("diabetes", "treated by", "metformin"),
    ("diabetes", "confirmed by", "glucose test"),
    ("diabetes", "confirmed by", "blood test"),
    ("diabetes", "managed with", "insulin therapy"),
    ("diabetes", "related to", "hypertension"),
    ("ibuprofen", "interacts with", "paracetamol"),
    ("salbutamol", "interacts with", "metoprolol"),
    ("paracetamol", "alleviates", "fever"),
    ("ibuprofen", "alleviates", "headache"),
    ("nitroglycerin", "alleviates", "chest pain"),
    ("cough", "co occurs with", "sore throat"),
    ("fever", "co occurs with", "headache"),
    ("dizziness", "co occurs with", "palpitations"),
]

# 42 whitespace tokens; entity labels cover exactly 24 of them.
TOY_CORPUS = """\
the patient reported cough and fever after influenza
chest pain with shortness of breath suggests angina
paracetamol reduces fever and headache in a common cold
spirometry confirmed asthma treated with salbutamol and inhaled therapy
blood test revealed anemia with pallor and fatigue
"""

TOY_COVERED_TOKENS = 24
TOY_TOTAL_TOKENS = 42

_TRIPLES_FILE = "toy_kg_triples.tsv"
_CLASSES_FILE = "toy_kg_classes.tsv"
_CORPUS_FILE = "toy_corpus.txt"


def write_toy_kg(directory):
    """Write the fixture TSV/text files into `directory`; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    triples_path = directory / _TRIPLES_FILE
    classes_path = directory / _CLASSES_FILE
    corpus_path = directory / _CORPUS_FILE
    with open(triples_path, "w", encoding="utf-8") as fh:
        for head, relation, tail in TOY_TRIPLES:
            fh.write("%s\t%s\t%s\n" % (head, relation, tail))
    with open(classes_path, "w", encoding="utf-8") as fh:
        for cls in sorted(TOY_CLASSES):
            for entity in TOY_CLASSES[cls]:
                fh.write("%s\t%s\tec\n" % (entity, cls))
        for cls in sorted(TOY_CLASSES):
            fh.write("%s\t%s\tcc\n" % (cls, TOY_ROOT))
    with open(corpus_path, "w", encoding="utf-8") as fh:
        fh.write(TOY_CORPUS)
    return triples_path, classes_path, corpus_path


def toy_paths():
    """Paths of the packaged fixture files (triples, classes, corpus)."""
    data = resources.files("closedkg") / "data"
    return (
        Path(str(data / _TRIPLES_FILE)),
        Path(str(data / _CLASSES_FILE)),
        Path(str(data / _CORPUS_FILE)),
    )


def load_toy_kg():
    """(KnowledgeGraph, ClassHierarchy, IngestReport) for the bundled KG."""
    triples_path, classes_path, _ = toy_paths()
    return load_graph(triples_path, classes_path)


def load_toy_corpus():
    """Whitespace tokens of the bundled corpus."""
    _, _, corpus_path = toy_paths()
    text = corpus_path.read_text(encoding="utf-8")
    return tokenize(text)
