import os
from vuln_predict.corpus.synthetic import SyntheticSpec, generate_synthetic_corpus, generate_synthetic_tweets
from vuln_predict.eval.experiments import (
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    run_experiment_4,
)
from vuln_predict.eval.sampling import exploit_lag_histogram
from vuln_predict.report.generator import ExperimentReportWriter

# Fixed seed so the published demo never changes
seed = 7

print(f"Generating synthetic corpus (seed={seed})...")

spec = SyntheticSpec(n_samples=3000, leak_strength=0.3)
corpus, mapping = generate_synthetic_corpus(seed, spec)
tweets = generate_synthetic_tweets(corpus, seed)

# Output must be 'dist/' for GitHub Pages
output_dir = "dist"

# Ensure output directory exists
os.makedirs(output_dir, exist_ok=True)

writer = ExperimentReportWriter(output_dir, config_hash="demo", seed=seed)
writer.generate_report(run_experiment_1(corpus, seed=seed))
writer.generate_report(run_experiment_2(corpus, seed=seed))
writer.generate_report(run_experiment_3(corpus, mapping, seed=seed))
writer.generate_report(run_experiment_4(corpus, tweets, seed=seed))
writer.write_lag_histogram(exploit_lag_histogram(corpus, bin_width_days=7))

print(f"✔ {len(writer.written)} demo artifacts written to {output_dir}/")
