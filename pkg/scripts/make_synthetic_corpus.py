"""Write a toy REAL/FAKE WAV corpus for smoke-testing the pipeline offline.

REAL clips are harmonic tones, FAKE clips are shaped noise. The result is
only useful for exercising the code path, not for measuring detection.
"""
import argparse

from fakespeech.synth import write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--files", type=int, default=10, help="files per class")
    ap.add_argument("--seconds", type=float, default=8.0)
    ap.add_argument("--rate", type=int, default=22050)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    real, fake = write_corpus(args.out_dir, args.files, args.seconds, args.rate, args.seed)
    print(f"wrote {args.files} files each to {real} and {fake}")


if __name__ == "__main__":
    main()
