"""Convert the Statlog German credit file (20 mixed attributes) into a
24-column numeric CSV with the label in the last column.

Usage: python3 python/prepare_german.py data/german.data data/german.csv
"""

import sys

NUMERIC = {1: "duration", 4: "amount", 7: "installment_rate", 10: "residence",
           12: "age", 15: "existing_credits", 17: "people_liable"}

# attribute index -> code prefix; the ordinal value is the code suffix
ORDINAL = {
    0: "A1",    # checking account status A11..A14
    2: "A3",    # credit history A30..A34
    5: "A6",    # savings A61..A65
    6: "A7",    # employment A71..A75
    8: "A9",    # personal status A91..A95
    9: "A10",   # other debtors A101..A103
    11: "A12",  # property A121..A124
    13: "A14",  # other installment plans A141..A143
    14: "A15",  # housing A151..A153
    16: "A17",  # job A171..A174
}

PURPOSE_LEVELS = ["A40", "A41", "A42", "A43", "A49"]


def convert_row(fields):
    out = []
    for idx in sorted(set(NUMERIC) | set(ORDINAL)):
        tok = fields[idx]
        if idx in NUMERIC:
            out.append(float(tok))
        else:
            out.append(float(tok[len(ORDINAL[idx]):]))
    out.append(1.0 if fields[18] == "A192" else 0.0)  # telephone
    out.append(1.0 if fields[19] == "A201" else 0.0)  # foreign worker
    for level in PURPOSE_LEVELS:
        out.append(1.0 if fields[3] == level else 0.0)
    out.append(float(fields[20]))  # 1 = good, 2 = bad
    return out


def main(src, dst):
    rows = []
    with open(src) as fh:
        for line in fh:
            fields = line.split()
            if fields:
                rows.append(convert_row(fields))
    with open(dst, "w") as fh:
        for row in rows:
            fh.write(",".join("%g" % v for v in row) + "\n")
    print("wrote %d rows x %d columns to %s" % (len(rows), len(rows[0]), dst))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
