from . import write_presets

for path in write_presets():
    print(path)
