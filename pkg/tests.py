import os

list_script = sorted(f'scripts/{script_name}' for script_name in os.listdir('scripts')
                     if script_name.startswith('script_') and script_name.endswith('.py'))

print('Executing scripts for CI:')
top_level_dir = os.getcwd()

for script_name in list_script:
    if not os.path.isfile(os.path.join(top_level_dir, script_name)):
        raise FileNotFoundError(f'Script {script_name} not exist in directory')

    print(f'\t* {script_name}')
    os.chdir(os.path.join(top_level_dir, os.path.dirname(script_name)))
    file_name = os.path.basename(script_name)

    with open(file_name, 'r', encoding='utf-8') as script:
        try:
            # each script runs in its own namespace
            exec(compile(script.read(), file_name, 'exec'), {'__name__': '__main__', '__file__': file_name})
            print(f"Script '{script_name}' successful.")
        except Exception as e:
            raise Exception('Error executing script {}: {}'.format(file_name, e))

os.chdir(top_level_dir)
