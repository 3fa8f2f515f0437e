import threading
import time
import psutil
from pathlib import Path
from vuln_predict.corpus.synthetic import SyntheticSpec, generate_synthetic_corpus
from vuln_predict.eval.experiments import run_experiment_1
from vuln_predict.report.generator import ExperimentReportWriter
from vuln_predict.utils.json_utils import atomic_write_json


class MemoryMonitor:
    """Monitor memory usage of the current process."""

    def __init__(self, sampling_interval=0.1):
        self.memory_over_time = []
        self.sampling_interval = sampling_interval
        self.process = psutil.Process()
        self.monitoring = [True]
        self.monitor_thread = None

    def _monitor_memory(self):
        while self.monitoring[0]:
            mem = self.process.memory_info().rss / 1024 / 1024  # MB
            self.memory_over_time.append(mem)
            time.sleep(self.sampling_interval)

    def start(self):
        self.monitoring[0] = True
        self.monitor_thread = threading.Thread(target=self._monitor_memory)
        self.monitor_thread.start()

    def stop(self):
        self.monitoring[0] = False
        if self.monitor_thread:
            self.monitor_thread.join()

    def save(self, output_path, timings=None):
        """Save memory samples and stage timings as JSON."""
        data = {
            "memory_over_time": self.memory_over_time,
            "timings": timings or {},
        }
        atomic_write_json(output_path, data)

        if self.memory_over_time:
            peak_mem = max(self.memory_over_time)
            avg_mem = sum(self.memory_over_time) / len(self.memory_over_time)
            print(f"Memory data saved to {output_path}")
            print(f"Peak memory usage: {peak_mem:.2f} MB")
            print(f"Average memory usage: {avg_mem:.2f} MB")
            print(f"Samples collected: {len(self.memory_over_time)}")
        if timings:
            print("\nStage timings:")
            for stage, seconds in timings.items():
                print(f"  {stage}: {seconds:.2f} s")


def main(n_samples=5000, seed=0):
    """Time Experiment 1 on a synthetic corpus of ``n_samples`` vulnerabilities."""
    output_dir = Path("output/performance")
    output_dir.mkdir(parents=True, exist_ok=True)
    output_file = output_dir / f"memory_data_n{n_samples}_seed{seed}.json"

    monitor = MemoryMonitor(sampling_interval=0.1)
    monitor.start()

    timings = {}
    try:
        start_time = time.time()
        corpus, _ = generate_synthetic_corpus(seed, SyntheticSpec(n_samples=n_samples))
        timings["generate"] = time.time() - start_time

        print(f"Running Experiment 1 on {len(corpus)} synthetic vulnerabilities...")
        start_time = time.time()
        report = run_experiment_1(corpus, seed=seed)
        timings["experiment_1"] = time.time() - start_time

        start_time = time.time()
        ExperimentReportWriter(output_dir / "exp1", config_hash="performance", seed=seed).generate_report(report)
        timings["write_report"] = time.time() - start_time
        print(f"Experiment 1 completed in {timings['experiment_1']:.2f} seconds")
    finally:
        # Ensure monitoring stops even if an error occurs
        monitor.stop()
        monitor.save(output_file, timings=timings)


if __name__ == "__main__":
    import sys

    n = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
    main(n)
