#!/usr/bin/env python3
import os
import subprocess
import sys
from pathlib import Path

DATASETS = ('bullseye', 'dino', 'circle')


def install_requirements():
    """Install Python requirements"""
    print("📦 Installing Python requirements...")
    subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])


def setup_environment():
    """Setup environment file"""
    env_file = ".env"

    if not os.path.exists(env_file):
        print("⚙️  Creating environment file...")
        with open(env_file, "w") as f:
            f.write("# InJecteD Configuration\n")
            f.write("INJECTED_OUTPUT_DIR=runs\n")
            f.write("INJECTED_DATA_DIR=data\n")
            f.write("INJECTED_SEED=42\n")
            f.write("\n# Logging\n")
            f.write("INJECTED_LOG_LEVEL=INFO\n")
            f.write("INJECTED_LOG_FILE=injected.log\n")
            f.write("INJECTED_DEBUG=false\n")
        print(f"✅ Created {env_file}.")
    else:
        print(f"✅ Environment file {env_file} already exists.")


def check_datasets(data_dir: str = "data") -> bool:
    """Check that the Datasaurus point-cloud CSVs are present"""
    missing = [name for name in DATASETS if not (Path(data_dir) / f"{name}.csv").exists()]
    if missing:
        print(f"⚠️  Missing datasets in {data_dir}/: {', '.join(f'{m}.csv' for m in missing)}")
        return False
    print(f"✅ Found {len(DATASETS)} datasets in {data_dir}/.")
    return True


def main():
    print("🌀 Setting up InJecteD...")

    try:
        install_requirements()
        setup_environment()

        if not check_datasets(os.getenv("INJECTED_DATA_DIR", "data")):
            print("\n⚠️  Warning: Datasaurus CSVs not found!")
            print("   Export the bullseye, dino and circle shapes as x,y CSV files into data/")

        print("\n✅ Setup complete!")
        print("\nNext steps:")
        print("1. Put bullseye.csv, dino.csv and circle.csv into data/")
        print("2. Run a pipeline: python3 run_injected.py all --dataset data/dino.csv")
        print("3. Compare configurations: python3 run_injected.py compare --dataset data/dino.csv")

    except Exception as e:
        print(f"❌ Setup failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
