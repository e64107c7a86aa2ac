"""DEAP preprocessed channel order: 32 EEG (Biosemi montage) + 8 peripheral."""

EEG_CHANNELS = (
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7",
    "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz",
    "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)

PERIPHERAL_CHANNELS = ("hEOG", "vEOG", "zEMG", "tEMG", "GSR", "Resp", "Plet", "Temp")

DEAP_CHANNELS = EEG_CHANNELS + PERIPHERAL_CHANNELS

N_CHANNELS = 40
N_TRIALS = 40
SAMPLING_RATE = 128.0
TRIAL_SAMPLES = 7680  # 60 s at 128 Hz
BASELINE_SAMPLES = 384  # 3 s pre-trial baseline in the 8064-sample variant
